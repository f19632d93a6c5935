#include "treerel/trainer.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "treerel/errors.hpp"

namespace treerel {

void TrainingConfig::validate() const {
    if (word_dim <= 0 || hidden <= 0) throw InvalidArgument("config: dims must be positive");
    if (mode_is_tagged(mode) && tag_dim <= 0)
        throw InvalidArgument("config: tag mode needs tag_dim > 0");
    if (learning_rate <= 0) throw InvalidArgument("config: learning_rate must be positive");
    if (l2 < 0) throw InvalidArgument("config: l2 must be non-negative");
    if (batch_size < 1) throw InvalidArgument("config: batch_size must be >= 1");
    if (epochs < 1) throw InvalidArgument("config: epochs must be >= 1");
    if (level != 1 && level != 2) throw InvalidArgument("config: level must be 1 or 2");
    if (threads < 1) throw InvalidArgument("config: threads must be >= 1");
}

InstanceRun run_instance(const Instance& inst, const ModelParams& params, const Vocab& vocab,
                         ModelGrads* grads) {
    if (!inst.arg1 || !inst.arg2) throw InvalidArgument("instance without argument trees");

    EncodedArgument enc1 = encode_argument(*inst.arg1, params, vocab);
    EncodedArgument enc2 = encode_argument(*inst.arg2, params, vocab);

    InstanceRun out;
    out.yhat = predict(enc1.r, enc2.r, params.cls_W, params.cls_b);
    if (!inst.labels.empty()) out.loss = cross_entropy(out.yhat, inst.labels.front());

    if (!grads) return out;
    if (inst.labels.size() != 1)
        throw InvalidArgument("backward needs a single-label (expanded) instance");

    Vector dlogits = softmax_xent_backward(out.yhat, inst.labels.front());
    Vector rr = concat(enc1.r, enc2.r);
    grads->g.cls_W.noalias() += dlogits * rr.transpose();
    grads->g.cls_b += dlogits;
    auto [dr1, dr2] = concat_backward(params.cls_W.transpose() * dlogits, enc1.r.size());
    encoder_backward(dr1, enc1, params, *grads);
    encoder_backward(dr2, enc2, params, *grads);
    grads->finalize_touched();
    return out;
}

double instance_loss(const Instance& inst, const ModelParams& params, const Vocab& vocab) {
    return run_instance(inst, params, vocab, nullptr).loss;
}

double corpus_objective(const std::vector<Instance>& instances, ModelParams& params,
                        const Vocab& vocab, double lambda, bool regularize_embeddings) {
    std::vector<double> losses;
    losses.reserve(instances.size());
    for (const Instance& inst : instances) losses.push_back(instance_loss(inst, params, vocab));
    return objective(losses, l2_squared_norm(params, regularize_embeddings), lambda);
}

EvalReport evaluate(const ModelParams& params, const std::vector<Instance>& instances,
                    const Vocab& vocab) {
    EvalReport rep;
    rep.class_hits.assign(params.n_labels, 0);
    rep.class_totals.assign(params.n_labels, 0);
    for (const Instance& inst : instances) {
        InstanceRun run = run_instance(inst, params, vocab, nullptr);
        int pred = argmax(run.yhat);
        ++rep.instances;
        bool hit = false;
        for (int gold : inst.labels) {
            ++rep.class_totals[gold];
            if (gold == pred) hit = true;
        }
        if (hit) {
            ++rep.hits;
            ++rep.class_hits[pred];
        }
    }
    rep.accuracy = rep.instances ? static_cast<double>(rep.hits) / rep.instances : 0.0;
    return rep;
}

namespace {

// lambda * theta over the regularized set; embeddings only when asked, in
// which case every row becomes a touched row.
void add_l2_gradient(ModelGrads& grads, ModelParams& params, double lambda,
                     bool regularize_embeddings) {
    if (lambda == 0.0) return;
    std::vector<TensorRef> ps = tensor_registry(params);
    std::vector<TensorRef> gs = tensor_registry(grads.g);
    for (size_t k = 0; k < ps.size(); ++k) {
        if (ps[k].sparse_rows) {
            if (!regularize_embeddings) continue;
            bool words = ps[k].name == "emb/word";
            Matrix& emb = words ? params.word_emb : params.tag_emb;
            Matrix& gemb = words ? grads.g.word_emb : grads.g.tag_emb;
            auto& touched = words ? grads.touched_words : grads.touched_tags;
            gemb += lambda * emb;
            for (int r = 0; r < emb.rows(); ++r) touched.push_back(r);
        } else if (ps[k].regularize) {
            Eigen::Map<Eigen::ArrayXd>(gs[k].data, gs[k].size()) +=
                lambda * Eigen::Map<const Eigen::ArrayXd>(ps[k].data, ps[k].size());
        }
    }
}

void scale_grads(ModelGrads& grads, double s) {
    std::vector<TensorRef> gs = tensor_registry(grads.g);
    for (TensorRef& t : gs) {
        if (t.sparse_rows) continue;  // handled per row below
        Eigen::Map<Eigen::ArrayXd>(t.data, t.size()) *= s;
    }
    for (int r : grads.touched_words) grads.g.word_emb.row(r) *= s;
    for (int r : grads.touched_tags) grads.g.tag_emb.row(r) *= s;
}

}  // namespace

TrainResult train(const TrainingConfig& cfg, const std::vector<Instance>& instances,
                  const Vocab& vocab, const Matrix& word_emb, const Matrix& tag_emb, Rng& rng) {
    cfg.validate();

    std::vector<Instance> train_set, dev_set;
    for (const Instance& inst : instances) {
        if (inst.split == Split::train) train_set.push_back(inst);
        else if (inst.split == Split::dev) dev_set.push_back(inst);
    }
    if (train_set.empty()) throw DataError("training split is empty");
    train_set = expand_multilabel(train_set);

    ModelParams params = init_model(cfg.mode, cfg.word_dim, cfg.tag_dim, cfg.hidden,
                                    vocab.n_labels(), word_emb, tag_emb, rng);
    AdaGradState opt(params, cfg.learning_rate);

    TrainResult result;
    const size_t n = train_set.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    // one gradient buffer per batch slot; reduction in slot order keeps the
    // result independent of the thread count
    std::vector<ModelGrads> slots;
    for (int i = 0; i < cfg.batch_size; ++i) slots.push_back(make_grads(params));
    ModelGrads total = make_grads(params);
    std::vector<double> slot_loss(cfg.batch_size, 0.0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(cfg.seed + static_cast<uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < n; start += cfg.batch_size) {
            const size_t bn = std::min<size_t>(cfg.batch_size, n - start);

            auto work = [&](size_t j) {
                slots[j].clear();
                InstanceRun run =
                    run_instance(train_set[order[start + j]], params, vocab, &slots[j]);
                slot_loss[j] = run.loss;
            };
            if (cfg.threads == 1 || bn == 1) {
                for (size_t j = 0; j < bn; ++j) work(j);
            } else {
                std::atomic<size_t> next{0};
                auto worker = [&] {
                    for (size_t j; (j = next.fetch_add(1)) < bn;) work(j);
                };
                std::vector<std::thread> pool;
                const size_t nthreads = std::min<size_t>(cfg.threads, bn);
                for (size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
                for (auto& t : pool) t.join();
            }

            total.clear();
            for (size_t j = 0; j < bn; ++j) {
                accumulate(total, slots[j]);
                epoch_loss += slot_loss[j];
            }
            scale_grads(total, 1.0 / static_cast<double>(bn));
            add_l2_gradient(total, params, cfg.l2, cfg.regularize_embeddings);
            opt.step(params, total);
        }

        EvalReport dev = evaluate(params, dev_set, vocab);
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = epoch_loss / static_cast<double>(n);
        log.dev_accuracy = dev.accuracy;
        result.log.push_back(log);

        if (result.best_epoch < 0 || dev.accuracy > result.best_dev_accuracy) {
            result.best_epoch = epoch;
            result.best_dev_accuracy = dev.accuracy;
            result.params = params;
            result.optimizer = opt;
        }
    }
    return result;
}

GradCheckReport gradient_check(const ModelParams& params, const Instance& inst,
                               const Vocab& vocab, double lambda, bool regularize_embeddings,
                               int sample_cap, uint64_t sample_seed) {
    ModelParams work = params;

    // analytic gradient of J = CE + (lambda/2)||theta||^2
    ModelGrads grads = make_grads(work);
    run_instance(inst, work, vocab, &grads);
    add_l2_gradient(grads, work, lambda, regularize_embeddings);

    auto objective_at = [&]() {
        return instance_loss(inst, work, vocab) +
               0.5 * lambda * l2_squared_norm(work, regularize_embeddings);
    };

    const double step = 1e-5;
    GradCheckReport report;
    std::vector<TensorRef> ps = tensor_registry(work);
    std::vector<TensorRef> gs = tensor_registry(grads.g);
    for (size_t k = 0; k < ps.size(); ++k) {
        GradCheckEntry entry;
        entry.tensor = ps[k].name;

        std::vector<Index> idx(ps[k].size());
        for (Index e = 0; e < ps[k].size(); ++e) idx[e] = e;
        if (sample_cap > 0 && ps[k].size() > sample_cap) {
            Rng pick(sample_seed + k);
            pick.shuffle(idx);
            idx.resize(sample_cap);  // distinct sample
        }

        for (Index e : idx) {
            double saved = ps[k].data[e];
            ps[k].data[e] = saved + step;
            double plus = objective_at();
            ps[k].data[e] = saved - step;
            double minus = objective_at();
            ps[k].data[e] = saved;

            double numeric = (plus - minus) / (2 * step);
            double analytic = gs[k].data[e];
            if (std::abs(analytic) + std::abs(numeric) < 1e-10) {
                ++entry.skipped;
                continue;
            }
            double rel = std::abs(analytic - numeric) /
                         std::max(std::abs(analytic), std::abs(numeric));
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
            ++entry.checked;
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.tensors.push_back(std::move(entry));
    }
    return report;
}

namespace {

// random strictly-binary tree over n_leaves leaves
std::unique_ptr<BinaryTree> random_btree(int n_leaves, Rng& rng, const Vocab& vocab) {
    auto node = std::make_unique<BinaryTree>();
    if (n_leaves == 1) {
        node->tag = vocab.id_to_tag[1 + rng.below(vocab.id_to_tag.size() - 1)];
        node->word = vocab.id_to_word[1 + rng.below(vocab.id_to_word.size() - 1)];
        return node;
    }
    int left = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n_leaves - 1)));
    node->tag = vocab.id_to_tag[1 + rng.below(vocab.id_to_tag.size() - 1)];
    node->left = random_btree(left, rng, vocab);
    node->right = random_btree(n_leaves - left, rng, vocab);
    return node;
}

}  // namespace

GradCheckSetup make_gradcheck_setup(EncoderMode mode, uint64_t seed) {
    GradCheckSetup s;
    s.vocab.label_names = {"A", "B", "C", "D"};
    s.vocab.word_to_id.emplace("<unk>", 0);
    s.vocab.id_to_word.push_back("<unk>");
    for (int i = 0; i < 9; ++i) {
        std::string w = "w" + std::to_string(i);
        s.vocab.word_to_id.emplace(w, static_cast<int>(s.vocab.id_to_word.size()));
        s.vocab.id_to_word.push_back(w);
    }
    s.vocab.tag_to_id.emplace("<unk>", 0);
    s.vocab.id_to_tag.push_back("<unk>");
    for (int i = 0; i < 5; ++i) {
        std::string t = "T" + std::to_string(i);
        s.vocab.tag_to_id.emplace(t, static_cast<int>(s.vocab.id_to_tag.size()));
        s.vocab.id_to_tag.push_back(t);
    }

    // healthy magnitudes keep every live gradient entry well above the
    // finite-difference noise floor
    const int word_dim = 3, tag_dim = 2, hidden = 4;
    const double scale = 0.5;
    Rng rng(seed);
    Matrix word_emb(s.vocab.id_to_word.size(), word_dim);
    rng.fill_uniform(word_emb, -scale, scale);
    Matrix tag_emb(s.vocab.id_to_tag.size(), tag_dim);
    rng.fill_uniform(tag_emb, -scale, scale);
    s.params = init_model(mode, word_dim, tag_dim, hidden, s.vocab.n_labels(), word_emb, tag_emb,
                          rng, scale);

    // <= 8 leaves keeps each argument at <= 15 nodes; shallow trees keep the
    // smallest live gradients clear of the finite-difference noise floor
    int leaves1 = 2 + static_cast<int>(rng.below(4));
    int leaves2 = 2 + static_cast<int>(rng.below(4));
    s.instance.arg1 = BinaryTreeRef(random_btree(leaves1, rng, s.vocab).release());
    s.instance.arg2 = BinaryTreeRef(random_btree(leaves2, rng, s.vocab).release());
    s.instance.labels = {static_cast<int>(rng.below(4))};
    s.instance.split = Split::train;
    return s;
}

}  // namespace treerel
