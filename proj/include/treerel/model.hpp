#pragma once

#include <string>
#include <vector>

#include "treerel/cells.hpp"
#include "treerel/rng.hpp"
#include "treerel/types.hpp"

namespace treerel {

enum class EncoderMode { tree_lstm, tree_gru, tag_tree_lstm, tag_tree_gru, bilstm, bigru };

bool mode_is_tree(EncoderMode m);
bool mode_is_tagged(EncoderMode m);
CellKind mode_cell_kind(EncoderMode m);
std::string mode_name(EncoderMode m);
EncoderMode mode_from_name(const std::string& name);

// Every trainable tensor of the pipeline. Both arguments are encoded with
// this one parameter set; tree modes own a tree cell, baseline modes own one
// sequential cell per direction.
struct ModelParams {
    EncoderMode mode = EncoderMode::tree_lstm;
    int word_dim = 0, tag_dim = 0, hidden = 0, n_labels = 0;

    Matrix word_emb;          // |V| x word_dim, one row per word id
    Matrix tag_emb;           // |T| x tag_dim; empty unless tag mode
    TreeCellParams cell;      // tree modes
    SeqCellParams seq_fwd, seq_bwd;  // baseline modes
    Matrix cls_W;             // n_labels x 2*repr_dim
    Vector cls_b;             // n_labels

    // root h (tree) or [h_fwd, h_bwd] (baselines)
    int repr_dim() const { return mode_is_tree(mode) ? hidden : 2 * hidden; }
};

// Flat view over a model's tensors; drives checkpoints, AdaGrad, the L2 term
// and the gradient checker. Biases are 1-column entries.
struct TensorRef {
    std::string name;
    double* data;
    Index rows, cols;
    bool regularize;   // in the L2 set (embeddings excluded by default)
    bool sparse_rows;  // embedding tables: only touched rows update

    Index size() const { return rows * cols; }
};

std::vector<TensorRef> tensor_registry(ModelParams& p);

// word-embedding init is the corpus module's job (GloVe rows); this creates
// everything and fills cell/classifier weights, tag rows stay as given.
ModelParams init_model(EncoderMode mode, int word_dim, int tag_dim, int hidden, int n_labels,
                       const Matrix& word_emb, const Matrix& tag_emb, Rng& rng,
                       double init_scale = 0.05);

// Same shapes, all zeros; used as the gradient accumulator. Touched row ids
// keep embedding updates sparse.
struct ModelGrads {
    ModelParams g;
    std::vector<int> touched_words, touched_tags;

    void add_word_row(int row, const Vector& grad);
    void add_tag_row(int row, const Vector& grad);
    void clear();
    // sort + dedupe touched lists
    void finalize_touched();
};

ModelGrads make_grads(const ModelParams& p);

// sum of squares over the regularized tensor set
double l2_squared_norm(ModelParams& p, bool include_embeddings);

// into += from (from's touched rows merged in)
void accumulate(ModelGrads& into, const ModelGrads& from);

}  // namespace treerel
