#pragma once

#include <memory>
#include <string>
#include <vector>

#include "treerel/errors.hpp"

namespace treerel {

// Constituency tree as read from bracketed text. A node carries a word iff it
// has no children (preterminals like "(NN cat)" parse to word-bearing leaves).
struct ParseTree {
    std::string tag;
    std::vector<ParseTree> children;
    std::string word;  // set iff leaf

    bool is_leaf() const { return children.empty(); }
    bool operator==(const ParseTree& o) const = default;
};

// Strictly binary form the encoders consume: every node has 0 or 2 children,
// no unary chains.
struct BinaryTree {
    std::string tag;
    std::unique_ptr<BinaryTree> left, right;
    std::string word;  // set iff leaf

    bool is_leaf() const { return !left; }
    std::unique_ptr<BinaryTree> clone() const;
};

using BinaryTreeRef = std::shared_ptr<const BinaryTree>;

// Parses one bracketed s-expression. An outermost unlabeled wrapper
// "( (S ...) )" is stripped; anything else with an empty label is an error.
// Tokens are kept verbatim. Throws ParseError with the byte offset on
// unbalanced input, empty labels, or a leaf with multiple words.
ParseTree parse_ptb(const std::string& text);

// Canonical single-line form "(TAG child child)" / "(TAG word)".
std::string serialize(const ParseTree& t);
std::string serialize(const BinaryTree& t);

// Removes every node with exactly one child; the survivor keeps the tag of
// the lowest node in the chain. Idempotent.
ParseTree collapse_unary_chains(const ParseTree& t);

// Right-branching binarization: children c1..ck (k>=3) become
// (c1, (c2, (... ck))) with every inserted node reusing the parent's tag.
// Requires a tree without unary chains.
std::unique_ptr<BinaryTree> binarize_right(const ParseTree& t);

// Single tree -> unchanged; several sentences -> new "Root" node over them.
ParseTree join_multisentence(const std::vector<ParseTree>& trees);

std::vector<std::string> leaf_words(const ParseTree& t);
std::vector<std::string> leaf_words(const BinaryTree& t);

bool trees_equal(const BinaryTree& a, const BinaryTree& b);

}  // namespace treerel
