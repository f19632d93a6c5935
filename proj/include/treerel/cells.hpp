#pragma once

#include <vector>

#include "treerel/numerics.hpp"
#include "treerel/rng.hpp"
#include "treerel/types.hpp"

namespace treerel {

enum class CellKind { lstm, gru };

// Gate order by kind. LSTM carries input/forget/output gates plus the
// candidate u; GRU carries reset/update plus the candidate h~.
namespace gate {
inline constexpr int I = 0, F = 1, O = 2, U = 3;  // lstm
inline constexpr int R = 0, Z = 1, H = 2;         // gru
}  // namespace gate

inline int gate_count(CellKind k) { return k == CellKind::lstm ? 4 : 3; }

// One gate's parameters. M is 0x0 unless the cell is tag-enhanced AND the
// gate is a real gate (candidates u / h~ never take a tag term; the tag
// embedding modulates gating only).
struct GateParams {
    Matrix W;  // d x word_dim
    Matrix U;  // d x 2d (tree) or d x d (sequential)
    Matrix M;  // d x tag_dim, or empty
    Vector b;  // d

    bool has_tag() const { return M.size() > 0; }
};

struct TreeCellParams {
    CellKind kind = CellKind::lstm;
    bool tagged = false;
    int word_dim = 0, tag_dim = 0, hidden = 0;
    std::vector<GateParams> gates;
};

struct SeqCellParams {
    CellKind kind = CellKind::lstm;
    int word_dim = 0, hidden = 0;
    std::vector<GateParams> gates;
};

// Per-node output plus the gate activations the backward pass needs.
struct NodeState {
    Vector h;
    Vector c;                // lstm only
    Vector i, f, o, u;       // lstm caches
    Vector r, z, hcand;      // gru caches

    bool has_cache() const { return h.size() > 0; }
};

// Cotangent on a state.
struct StateGrad {
    Vector dh;
    Vector dc;  // lstm only
};

NodeState zero_state(int hidden, CellKind kind);
StateGrad zero_state_grad(int hidden, CellKind kind);

// Zero-valued parameter blocks (also used as gradient accumulators).
TreeCellParams make_tree_cell(CellKind kind, bool tagged, int word_dim, int tag_dim, int hidden);
SeqCellParams make_seq_cell(CellKind kind, int word_dim, int hidden);

// Weights uniform in [-scale, scale]; biases stay zero.
void init_uniform(TreeCellParams& p, Rng& rng, double scale);
void init_uniform(SeqCellParams& p, Rng& rng, double scale);

// x is the leaf's word embedding (null at internal nodes); t is the node's
// tag embedding (required iff tag-enhanced). Leaves pass zero child states.
// Single forget gate: c = i*u + f*cL + f*cR.
NodeState tree_lstm_compose(const Vector* x, const Vector* t, const NodeState& left,
                            const NodeState& right, const TreeCellParams& p);

// h = z*h~ + (1-z)*(hL+hR); the same reset gate scales both children.
NodeState tree_gru_compose(const Vector* x, const Vector* t, const NodeState& left,
                           const NodeState& right, const TreeCellParams& p);

NodeState seq_step_lstm(const Vector& x, const NodeState& prev, const SeqCellParams& p);
NodeState seq_step_gru(const Vector& x, const NodeState& prev, const SeqCellParams& p);

// Exact reverse-mode step for either tree cell. Parameter gradients
// accumulate into `grads` (same shape as p); dx/dt are written when the
// corresponding input was present; child cotangents accumulate into
// dleft/dright.
void tree_cell_backward(const StateGrad& out, const NodeState& cached, const Vector* x,
                        const Vector* t, const NodeState& left, const NodeState& right,
                        const TreeCellParams& p, TreeCellParams& grads, Vector* dx, Vector* dt,
                        StateGrad& dleft, StateGrad& dright);

void seq_step_backward(const StateGrad& out, const NodeState& cached, const Vector& x,
                       const NodeState& prev, const SeqCellParams& p, SeqCellParams& grads,
                       Vector& dx, StateGrad& dprev);

}  // namespace treerel
