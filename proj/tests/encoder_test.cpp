#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "treerel/encoder.hpp"

#include "test_util.hpp"

using namespace treerel;
using test_util::small_vocab;

namespace {

ModelParams random_model(EncoderMode mode, const Vocab& vocab, Rng& rng, int wd = 3, int td = 2,
                         int d = 4) {
    Matrix word_emb(vocab.id_to_word.size(), wd);
    rng.fill_uniform(word_emb, -0.5, 0.5);
    Matrix tag_emb(vocab.id_to_tag.size(), td);
    rng.fill_uniform(tag_emb, -0.5, 0.5);
    return init_model(mode, wd, td, d, vocab.n_labels(), word_emb, tag_emb, rng, 0.5);
}

const std::vector<EncoderMode> kAllModes = {EncoderMode::tree_lstm,     EncoderMode::tree_gru,
                                            EncoderMode::tag_tree_lstm, EncoderMode::tag_tree_gru,
                                            EncoderMode::bilstm,        EncoderMode::bigru};

}  // namespace

TEST_CASE("single leaf with zero parameters encodes to zero") {
    Vocab vocab = small_vocab();
    for (EncoderMode mode : kAllModes) {
        Rng rng(1);
        ModelParams p = random_model(mode, vocab, rng);
        // zero every tensor
        for (TensorRef& t : tensor_registry(p))
            Eigen::Map<Eigen::ArrayXd>(t.data, t.size()).setZero();
        BinaryTree leaf;
        leaf.tag = "NN";
        leaf.word = "cat";
        EncodedArgument enc = encode_argument(leaf, p, vocab);
        CHECK(enc.r.isZero(0));
    }
}

TEST_CASE("two-leaf tree equals one cell application") {
    Vocab vocab = small_vocab();
    Rng rng(2);
    ModelParams p = random_model(EncoderMode::tree_lstm, vocab, rng);
    auto tree = parse_ptb("(NP (DT the) (NN cat))");
    auto btree = binarize_right(tree);
    EncodedArgument enc = encode_argument(*btree, p, vocab);

    NodeState zero = zero_state(p.hidden, CellKind::lstm);
    Vector x_the = p.word_emb.row(vocab.word_id("the")).transpose();
    Vector x_cat = p.word_emb.row(vocab.word_id("cat")).transpose();
    NodeState leaf1 = tree_lstm_compose(&x_the, nullptr, zero, zero, p.cell);
    NodeState leaf2 = tree_lstm_compose(&x_cat, nullptr, zero, zero, p.cell);
    NodeState root = tree_lstm_compose(nullptr, nullptr, leaf1, leaf2, p.cell);
    CHECK((enc.r - root.h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoding is deterministic") {
    Vocab vocab = small_vocab();
    for (EncoderMode mode : kAllModes) {
        Rng rng(3);
        ModelParams p = random_model(mode, vocab, rng);
        Rng treeg(4);
        auto tree = test_util::random_binary_tree(treeg, 5);
        Vector r1 = encode_argument(*tree, p, vocab).r;
        Vector r2 = encode_argument(*tree, p, vocab).r;
        CHECK(r1 == r2);
    }
}

TEST_CASE("tree modes see structure, baselines do not") {
    Vocab vocab = small_vocab();
    // same leaves, different shapes
    auto left_heavy = parse_ptb("(S (S (NN the) (NN cat)) (NN sat))");
    auto right_heavy = parse_ptb("(S (NN the) (S (NN cat) (NN sat)))");
    auto a = binarize_right(left_heavy);
    auto b = binarize_right(right_heavy);

    for (EncoderMode mode : kAllModes) {
        Rng rng(5);
        ModelParams p = random_model(mode, vocab, rng);
        Vector ra = encode_argument(*a, p, vocab).r;
        Vector rb = encode_argument(*b, p, vocab).r;
        if (mode_is_tree(mode)) {
            CHECK((ra - rb).cwiseAbs().maxCoeff() > 1e-12);
        } else {
            CHECK(ra == rb);
        }
    }
}

TEST_CASE("repeated words accumulate into one embedding row") {
    Vocab vocab = small_vocab();
    Rng rng(6);
    ModelParams p = random_model(EncoderMode::tree_lstm, vocab, rng);
    auto tree = binarize_right(parse_ptb("(NP (NN cat) (NN cat))"));
    EncodedArgument enc = encode_argument(*tree, p, vocab);

    ModelGrads grads = make_grads(p);
    Vector d_r(p.hidden);
    rng.fill_uniform(d_r, -1, 1);
    encoder_backward(d_r, enc, p, grads);
    grads.finalize_touched();
    REQUIRE(grads.touched_words.size() == 1);
    CHECK(grads.touched_words[0] == vocab.word_id("cat"));

    // finite-difference the shared row: J = d_r . r
    int row = vocab.word_id("cat");
    Vector analytic = grads.g.word_emb.row(row).transpose();
    Vector numeric(p.word_dim);
    for (int j = 0; j < p.word_dim; ++j) {
        double saved = p.word_emb(row, j);
        p.word_emb(row, j) = saved + 1e-5;
        double plus = d_r.dot(encode_argument(*tree, p, vocab).r);
        p.word_emb(row, j) = saved - 1e-5;
        double minus = d_r.dot(encode_argument(*tree, p, vocab).r);
        p.word_emb(row, j) = saved;
        numeric(j) = (plus - minus) / 2e-5;
    }
    CHECK(test_util::max_rel_err(analytic, numeric) < 1e-6);
}

TEST_CASE("zero cotangent leaves gradients zero") {
    Vocab vocab = small_vocab();
    for (EncoderMode mode : kAllModes) {
        Rng rng(7);
        ModelParams p = random_model(mode, vocab, rng);
        Rng treeg(8);
        auto tree = test_util::random_binary_tree(treeg, 4);
        EncodedArgument enc = encode_argument(*tree, p, vocab);
        ModelGrads grads = make_grads(p);
        encoder_backward(Vector::Zero(p.repr_dim()), enc, p, grads);
        for (TensorRef& t : tensor_registry(grads.g))
            CHECK(Eigen::Map<Eigen::ArrayXd>(t.data, t.size()).isZero(0));
    }
}

TEST_CASE("encoder backward matches finite differences in every mode") {
    Vocab vocab = small_vocab();
    for (EncoderMode mode : kAllModes) {
        Rng rng(9);
        ModelParams p = random_model(mode, vocab, rng);
        Rng treeg(10);
        auto tree = test_util::random_binary_tree(treeg, 6);

        Vector w(p.repr_dim());
        rng.fill_uniform(w, -1, 1);
        EncodedArgument enc = encode_argument(*tree, p, vocab);
        ModelGrads grads = make_grads(p);
        encoder_backward(w, enc, p, grads);

        auto scalar = [&]() { return w.dot(encode_argument(*tree, p, vocab).r); };
        std::vector<TensorRef> ps = tensor_registry(p);
        std::vector<TensorRef> gs = tensor_registry(grads.g);
        double worst = 0.0;
        for (size_t k = 0; k < ps.size(); ++k) {
            if (ps[k].name.rfind("cls/", 0) == 0) continue;  // classifier unused here
            for (Index e = 0; e < ps[k].size(); ++e) {
                double saved = ps[k].data[e];
                ps[k].data[e] = saved + 1e-5;
                double plus = scalar();
                ps[k].data[e] = saved - 1e-5;
                double minus = scalar();
                ps[k].data[e] = saved;
                double num = (plus - minus) / 2e-5;
                double ana = gs[k].data[e];
                if (std::abs(num) + std::abs(ana) < 1e-10) continue;
                worst = std::max(worst, test_util::rel_err(ana, num));
            }
        }
        INFO(mode_name(mode));
        CHECK(worst < 1e-4);  // full-model tolerance; per-kernel checks sit at 1e-6
    }
}
