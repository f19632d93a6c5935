#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "treerel/tree.hpp"

#include "test_util.hpp"

using namespace treerel;
using test_util::random_nary_tree;

TEST_CASE("parse_ptb reads a flat NP") {
    ParseTree t = parse_ptb("(NP (DT the) (NN cat))");
    CHECK(t.tag == "NP");
    REQUIRE(t.children.size() == 2);
    CHECK(t.children[0].tag == "DT");
    CHECK(t.children[0].word == "the");
    CHECK(t.children[1].tag == "NN");
    CHECK(t.children[1].word == "cat");
}

TEST_CASE("parse_ptb strips the outermost unlabeled wrapper") {
    ParseTree t = parse_ptb("((S (NN dogs)))");
    CHECK(t.tag == "S");
    REQUIRE(t.children.size() == 1);
    CHECK(t.children[0].word == "dogs");
}

TEST_CASE("parse_ptb reports unbalanced input with its byte offset") {
    try {
        parse_ptb("(NP (DT the");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 11);
    }
}

TEST_CASE("parse_ptb rejects malformed nodes") {
    CHECK_THROWS_AS(parse_ptb("(NP ( the))"), ParseError);      // empty label inside
    CHECK_THROWS_AS(parse_ptb("(NN dog cat)"), ParseError);     // two words on a leaf
    CHECK_THROWS_AS(parse_ptb("(NP dog (NN cat))"), ParseError);
    CHECK_THROWS_AS(parse_ptb(""), ParseError);
    CHECK_THROWS_AS(parse_ptb("(S (NN a)) junk"), ParseError);
    CHECK_THROWS_AS(parse_ptb("((S (NN a)) (S (NN b)))"), ParseError);  // multi-child wrapper
}

TEST_CASE("parse_ptb keeps tokens verbatim") {
    ParseTree t = parse_ptb("(NN McDonald's)");
    CHECK(t.word == "McDonald's");
}

TEST_CASE("collapse keeps the lowest tag of a unary chain") {
    ParseTree t = collapse_unary_chains(parse_ptb("(S (NP (NN dog)))"));
    CHECK(t.tag == "NN");
    CHECK(t.word == "dog");
    CHECK(t.is_leaf());
}

TEST_CASE("collapse leaves chain-free trees alone") {
    ParseTree t = parse_ptb("(NP (DT the) (NN cat))");
    CHECK(collapse_unary_chains(t) == t);
    ParseTree deep = parse_ptb("(S (VP (VBD ran) (PP (IN to) (NP (NN town)))))");
    // the S->VP link is unary, so VP survives; the rest is untouched
    ParseTree c = collapse_unary_chains(deep);
    CHECK(c.tag == "VP");
    CHECK(c.children.size() == 2);
}

TEST_CASE("collapse is idempotent on random trees") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        ParseTree t = random_nary_tree(rng, 4, true);
        ParseTree once = collapse_unary_chains(t);
        CHECK(collapse_unary_chains(once) == once);
        CHECK_FALSE(test_util::has_unary_chain(once));
        CHECK(leaf_words(once) == leaf_words(t));
    }
}

TEST_CASE("binarize_right groups trailing children under the parent tag") {
    ParseTree t = parse_ptb("(S (NP (NN a) (NN b)) (VP (VB c) (NN d)) (PP (IN e) (NN f)))");
    auto b = binarize_right(t);
    CHECK(b->tag == "S");
    CHECK(b->left->tag == "NP");
    CHECK(b->right->tag == "S");  // inserted node reuses the parent tag
    CHECK(b->right->left->tag == "VP");
    CHECK(b->right->right->tag == "PP");
}

TEST_CASE("binarize_right maps binary nodes structurally unchanged") {
    ParseTree t = parse_ptb("(NP (DT the) (NN cat))");
    auto b = binarize_right(t);
    CHECK(b->tag == "NP");
    CHECK(b->left->word == "the");
    CHECK(b->right->word == "cat");
}

TEST_CASE("binarize_right preserves leaf order on random trees") {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
        ParseTree t = random_nary_tree(rng, 4, false);
        auto b = binarize_right(t);
        CHECK(test_util::is_strictly_binary(*b));
        CHECK(leaf_words(*b) == leaf_words(t));
    }
}

TEST_CASE("join_multisentence") {
    ParseTree t1 = parse_ptb("(S (NN a) (NN b))");
    ParseTree t2 = parse_ptb("(S (NN c) (NN d))");
    ParseTree t3 = parse_ptb("(S (NN e) (NN f))");

    CHECK(join_multisentence({t1}) == t1);

    ParseTree two = join_multisentence({t1, t2});
    CHECK(two.tag == "Root");
    CHECK(two.children.size() == 2);

    auto b = binarize_right(collapse_unary_chains(join_multisentence({t1, t2, t3})));
    CHECK(b->tag == "Root");
    CHECK(b->left->tag == "S");
    CHECK(b->right->tag == "Root");
    CHECK(b->right->left->tag == "S");
    CHECK(b->right->right->tag == "S");

    CHECK_THROWS_AS(join_multisentence({}), InvalidArgument);
}

TEST_CASE("serialize/parse round-trips") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        ParseTree t = random_nary_tree(rng, 4, true);
        CHECK(parse_ptb(serialize(t)) == t);
    }
    // binary form round-trips through the same grammar
    ParseTree t = random_nary_tree(rng, 4, false);
    auto b = binarize_right(t);
    CHECK(serialize(*binarize_right(parse_ptb(serialize(*b)))) == serialize(*b));
}

TEST_CASE("full normalization preserves leaf words and order") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        std::vector<ParseTree> sents;
        size_t n = 1 + rng.below(3);
        for (size_t s = 0; s < n; ++s) sents.push_back(random_nary_tree(rng, 3, true));
        std::vector<std::string> expect;
        for (const auto& s : sents)
            for (const auto& w : leaf_words(s)) expect.push_back(w);
        auto b = binarize_right(collapse_unary_chains(join_multisentence(sents)));
        CHECK(leaf_words(*b) == expect);
        CHECK(test_util::is_strictly_binary(*b));
    }
}
