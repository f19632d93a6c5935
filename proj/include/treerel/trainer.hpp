#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treerel/classifier.hpp"
#include "treerel/corpus.hpp"
#include "treerel/encoder.hpp"
#include "treerel/model.hpp"
#include "treerel/optimizer.hpp"

namespace treerel {

struct TrainingConfig {
    EncoderMode mode = EncoderMode::tag_tree_lstm;
    int level = 1;
    int word_dim = 50;       // omega
    int tag_dim = 50;        // tau
    int hidden = 250;        // d
    double learning_rate = 0.01;  // eta
    double l2 = 0.0001;      // lambda
    int batch_size = 10;     // b
    int epochs = 20;
    uint64_t seed = 1;
    bool regularize_embeddings = false;
    int threads = 1;

    void validate() const;
};

struct InstanceRun {
    double loss = 0.0;
    Vector yhat;
};

// Forward (and backward when grads != nullptr) through both encoders and the
// classifier. Backward requires a single-label instance.
InstanceRun run_instance(const Instance& inst, const ModelParams& params, const Vocab& vocab,
                         ModelGrads* grads);

// Cross-entropy of one instance under current params; no side effects.
double instance_loss(const Instance& inst, const ModelParams& params, const Vocab& vocab);

// Mean cross-entropy over instances plus (lambda/2)||theta||^2.
double corpus_objective(const std::vector<Instance>& instances, ModelParams& params,
                        const Vocab& vocab, double lambda, bool regularize_embeddings);

struct EvalReport {
    double accuracy = 0.0;
    int instances = 0;
    int hits = 0;
    // per label id: an instance counts toward every gold label it carries;
    // a hit is credited to the predicted (matched) class
    std::vector<int> class_hits, class_totals;
};

// Multi-annotation rule: the argmax prediction is a hit iff it is any of the
// instance's gold labels.
EvalReport evaluate(const ModelParams& params, const std::vector<Instance>& instances,
                    const Vocab& vocab);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
};

struct TrainResult {
    ModelParams params;      // best dev accuracy, earliest epoch on ties
    AdaGradState optimizer;  // accumulators as of the best epoch
    int best_epoch = -1;
    double best_dev_accuracy = 0.0;
    std::vector<EpochLog> log;
};

// Per epoch: shuffle under seed+epoch, accumulate gradients over each batch,
// one AdaGrad step per batch, then score the dev split. Multi-label training
// instances are expanded; dev/test never are. rng continues the stream that
// initialized the embeddings so a (config, corpus, seed) triple pins every
// draw.
TrainResult train(const TrainingConfig& cfg, const std::vector<Instance>& instances,
                  const Vocab& vocab, const Matrix& word_emb, const Matrix& tag_emb, Rng& rng);

struct GradCheckEntry {
    std::string tensor;
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> tensors;
    double max_rel_err = 0.0;

    bool pass(double tol) const { return max_rel_err < tol; }
};

// Central differences (step 1e-5) of the single-instance objective against
// the analytic gradients, every entry, or a seeded sample of sample_cap
// entries for tensors larger than that (sample_cap = 0 checks everything).
// Entries with |analytic| + |numeric| < 1e-10 are skipped.
GradCheckReport gradient_check(const ModelParams& params, const Instance& inst,
                               const Vocab& vocab, double lambda, bool regularize_embeddings,
                               int sample_cap = 200, uint64_t sample_seed = 0);

// Small fixed geometry (d=4, omega=3, tau=2, 10 words, trees of <= 15 nodes)
// for oracle runs of any mode.
struct GradCheckSetup {
    Vocab vocab;
    ModelParams params;
    Instance instance;
};
GradCheckSetup make_gradcheck_setup(EncoderMode mode, uint64_t seed);

}  // namespace treerel
