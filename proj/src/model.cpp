#include "treerel/model.hpp"

#include <algorithm>

#include "treerel/errors.hpp"

namespace treerel {

bool mode_is_tree(EncoderMode m) {
    return m == EncoderMode::tree_lstm || m == EncoderMode::tree_gru ||
           m == EncoderMode::tag_tree_lstm || m == EncoderMode::tag_tree_gru;
}

bool mode_is_tagged(EncoderMode m) {
    return m == EncoderMode::tag_tree_lstm || m == EncoderMode::tag_tree_gru;
}

CellKind mode_cell_kind(EncoderMode m) {
    switch (m) {
        case EncoderMode::tree_lstm:
        case EncoderMode::tag_tree_lstm:
        case EncoderMode::bilstm:
            return CellKind::lstm;
        default:
            return CellKind::gru;
    }
}

std::string mode_name(EncoderMode m) {
    switch (m) {
        case EncoderMode::tree_lstm: return "tree_lstm";
        case EncoderMode::tree_gru: return "tree_gru";
        case EncoderMode::tag_tree_lstm: return "tag_tree_lstm";
        case EncoderMode::tag_tree_gru: return "tag_tree_gru";
        case EncoderMode::bilstm: return "bilstm";
        case EncoderMode::bigru: return "bigru";
    }
    throw InvalidArgument("unknown mode");
}

EncoderMode mode_from_name(const std::string& name) {
    for (EncoderMode m : {EncoderMode::tree_lstm, EncoderMode::tree_gru,
                          EncoderMode::tag_tree_lstm, EncoderMode::tag_tree_gru,
                          EncoderMode::bilstm, EncoderMode::bigru})
        if (mode_name(m) == name) return m;
    throw InvalidArgument("unknown encoder mode '" + name + "'");
}

namespace {

const char* lstm_gate_names[] = {"i", "f", "o", "u"};
const char* gru_gate_names[] = {"r", "z", "h"};

void register_gates(std::vector<TensorRef>& out, const std::string& prefix,
                    std::vector<GateParams>& gates, CellKind kind) {
    const char** names = (kind == CellKind::lstm) ? lstm_gate_names : gru_gate_names;
    for (size_t g = 0; g < gates.size(); ++g) {
        GateParams& gp = gates[g];
        std::string base = prefix + "/" + names[g] + "/";
        out.push_back({base + "W", gp.W.data(), gp.W.rows(), gp.W.cols(), true, false});
        out.push_back({base + "U", gp.U.data(), gp.U.rows(), gp.U.cols(), true, false});
        if (gp.has_tag())
            out.push_back({base + "M", gp.M.data(), gp.M.rows(), gp.M.cols(), true, false});
        out.push_back({base + "b", gp.b.data(), gp.b.size(), 1, true, false});
    }
}

}  // namespace

std::vector<TensorRef> tensor_registry(ModelParams& p) {
    std::vector<TensorRef> out;
    out.push_back({"emb/word", p.word_emb.data(), p.word_emb.rows(), p.word_emb.cols(), false, true});
    if (p.tag_emb.size() > 0)
        out.push_back({"emb/tag", p.tag_emb.data(), p.tag_emb.rows(), p.tag_emb.cols(), false, true});
    if (mode_is_tree(p.mode)) {
        register_gates(out, "cell", p.cell.gates, p.cell.kind);
    } else {
        register_gates(out, "seq_fwd", p.seq_fwd.gates, p.seq_fwd.kind);
        register_gates(out, "seq_bwd", p.seq_bwd.gates, p.seq_bwd.kind);
    }
    out.push_back({"cls/W", p.cls_W.data(), p.cls_W.rows(), p.cls_W.cols(), true, false});
    out.push_back({"cls/b", p.cls_b.data(), p.cls_b.size(), 1, true, false});
    return out;
}

ModelParams init_model(EncoderMode mode, int word_dim, int tag_dim, int hidden, int n_labels,
                       const Matrix& word_emb, const Matrix& tag_emb, Rng& rng,
                       double init_scale) {
    if (word_dim <= 0 || hidden <= 0 || n_labels <= 0)
        throw InvalidArgument("init_model: dimensions must be positive");
    ModelParams p;
    p.mode = mode;
    p.word_dim = word_dim;
    p.tag_dim = mode_is_tagged(mode) ? tag_dim : 0;
    p.hidden = hidden;
    p.n_labels = n_labels;
    p.word_emb = word_emb;
    if (mode_is_tagged(mode)) {
        if (tag_emb.size() == 0) throw InvalidArgument("init_model: tag mode needs tag embeddings");
        p.tag_emb = tag_emb;
    }
    if (mode_is_tree(mode)) {
        p.cell = make_tree_cell(mode_cell_kind(mode), mode_is_tagged(mode), word_dim, p.tag_dim,
                                hidden);
        init_uniform(p.cell, rng, init_scale);
    } else {
        p.seq_fwd = make_seq_cell(mode_cell_kind(mode), word_dim, hidden);
        p.seq_bwd = make_seq_cell(mode_cell_kind(mode), word_dim, hidden);
        init_uniform(p.seq_fwd, rng, init_scale);
        init_uniform(p.seq_bwd, rng, init_scale);
    }
    p.cls_W = Matrix::Zero(n_labels, 2 * p.repr_dim());
    rng.fill_uniform(p.cls_W, -init_scale, init_scale);
    p.cls_b = Vector::Zero(n_labels);
    return p;
}

ModelGrads make_grads(const ModelParams& p) {
    ModelGrads g;
    g.g.mode = p.mode;
    g.g.word_dim = p.word_dim;
    g.g.tag_dim = p.tag_dim;
    g.g.hidden = p.hidden;
    g.g.n_labels = p.n_labels;
    g.g.word_emb = Matrix::Zero(p.word_emb.rows(), p.word_emb.cols());
    if (p.tag_emb.size() > 0) g.g.tag_emb = Matrix::Zero(p.tag_emb.rows(), p.tag_emb.cols());
    if (mode_is_tree(p.mode)) {
        g.g.cell = make_tree_cell(p.cell.kind, p.cell.tagged, p.word_dim, p.tag_dim, p.hidden);
    } else {
        g.g.seq_fwd = make_seq_cell(p.seq_fwd.kind, p.word_dim, p.hidden);
        g.g.seq_bwd = make_seq_cell(p.seq_bwd.kind, p.word_dim, p.hidden);
    }
    g.g.cls_W = Matrix::Zero(p.cls_W.rows(), p.cls_W.cols());
    g.g.cls_b = Vector::Zero(p.cls_b.size());
    return g;
}

void ModelGrads::add_word_row(int row, const Vector& grad) {
    g.word_emb.row(row) += grad.transpose();
    touched_words.push_back(row);
}

void ModelGrads::add_tag_row(int row, const Vector& grad) {
    g.tag_emb.row(row) += grad.transpose();
    touched_tags.push_back(row);
}

static void zero_gates(std::vector<GateParams>& gates) {
    for (auto& gp : gates) {
        gp.W.setZero();
        gp.U.setZero();
        if (gp.has_tag()) gp.M.setZero();
        gp.b.setZero();
    }
}

void ModelGrads::clear() {
    // embeddings: only blank the rows that were written
    for (int r : touched_words) g.word_emb.row(r).setZero();
    for (int r : touched_tags) g.tag_emb.row(r).setZero();
    touched_words.clear();
    touched_tags.clear();
    zero_gates(g.cell.gates);
    zero_gates(g.seq_fwd.gates);
    zero_gates(g.seq_bwd.gates);
    g.cls_W.setZero();
    g.cls_b.setZero();
}

void ModelGrads::finalize_touched() {
    auto dedupe = [](std::vector<int>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(touched_words);
    dedupe(touched_tags);
}

double l2_squared_norm(ModelParams& p, bool include_embeddings) {
    double sum = 0.0;
    for (const TensorRef& t : tensor_registry(p)) {
        if (!t.regularize && !include_embeddings) continue;
        sum += Eigen::Map<const Eigen::ArrayXd>(t.data, t.size()).square().sum();
    }
    return sum;
}

void accumulate(ModelGrads& into, const ModelGrads& from) {
    auto add_gates = [](std::vector<GateParams>& a, const std::vector<GateParams>& b) {
        for (size_t i = 0; i < a.size(); ++i) {
            a[i].W += b[i].W;
            a[i].U += b[i].U;
            if (a[i].has_tag()) a[i].M += b[i].M;
            a[i].b += b[i].b;
        }
    };
    auto unique_rows = [](const std::vector<int>& v) {
        std::vector<int> rows = v;
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        return rows;
    };
    for (int r : unique_rows(from.touched_words)) {
        into.touched_words.push_back(r);
        into.g.word_emb.row(r) += from.g.word_emb.row(r);
    }
    for (int r : unique_rows(from.touched_tags)) {
        into.touched_tags.push_back(r);
        into.g.tag_emb.row(r) += from.g.tag_emb.row(r);
    }
    add_gates(into.g.cell.gates, from.g.cell.gates);
    add_gates(into.g.seq_fwd.gates, from.g.seq_fwd.gates);
    add_gates(into.g.seq_bwd.gates, from.g.seq_bwd.gates);
    into.g.cls_W += from.g.cls_W;
    into.g.cls_b += from.g.cls_b;
}

}  // namespace treerel
