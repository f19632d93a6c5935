#include "treerel/cells.hpp"

namespace treerel {

namespace {

void check_state(const NodeState& s, int hidden, CellKind kind, const char* who) {
    if (s.h.size() != hidden)
        throw ShapeError(std::string(who) + ": child h has size " + std::to_string(s.h.size()) +
                         ", expected " + std::to_string(hidden));
    if (kind == CellKind::lstm && s.c.size() != hidden)
        throw ShapeError(std::string(who) + ": child c has size " + std::to_string(s.c.size()));
}

// b + U*hc (+ W*x at leaves) (+ M*t in tag mode)
Vector gate_preactivation(const GateParams& g, const Vector* x, const Vector* t,
                          const Vector& hc) {
    Vector pre = g.b;
    pre.noalias() += g.U * hc;
    if (x) pre.noalias() += g.W * (*x);
    if (t && g.has_tag()) pre.noalias() += g.M * (*t);
    return pre;
}

void check_inputs(const TreeCellParams& p, const Vector* x, const Vector* t, const char* who) {
    if (t && !p.tagged) throw ModeError(std::string(who) + ": tag input in non-tag mode");
    if (!t && p.tagged) throw ModeError(std::string(who) + ": tag-enhanced cell needs a tag input");
    if (x && x->size() != p.word_dim)
        throw ShapeError(std::string(who) + ": word input has size " + std::to_string(x->size()) +
                         ", expected " + std::to_string(p.word_dim));
    if (t && t->size() != p.tag_dim)
        throw ShapeError(std::string(who) + ": tag input has size " + std::to_string(t->size()) +
                         ", expected " + std::to_string(p.tag_dim));
}

// scatter one gate's delta into its parameter gradients and input cotangents
void scatter_gate(const GateParams& g, GateParams& grad, const Vector& da, const Vector* x,
                  const Vector* t, const Vector& hc, Vector* dx, Vector* dt, Vector& dhc) {
    if (x) {
        grad.W.noalias() += da * x->transpose();
        if (dx) dx->noalias() += g.W.transpose() * da;
    }
    if (t && g.has_tag()) {
        grad.M.noalias() += da * t->transpose();
        if (dt) dt->noalias() += g.M.transpose() * da;
    }
    grad.U.noalias() += da * hc.transpose();
    grad.b += da;
    dhc.noalias() += g.U.transpose() * da;
}

GateParams make_gate(int hidden, int in_dim, int rec_dim, int tag_dim) {
    GateParams g;
    g.W = Matrix::Zero(hidden, in_dim);
    g.U = Matrix::Zero(hidden, rec_dim);
    if (tag_dim > 0) g.M = Matrix::Zero(hidden, tag_dim);
    g.b = Vector::Zero(hidden);
    return g;
}

void init_gate(GateParams& g, Rng& rng, double scale) {
    rng.fill_uniform(g.W, -scale, scale);
    rng.fill_uniform(g.U, -scale, scale);
    if (g.has_tag()) rng.fill_uniform(g.M, -scale, scale);
    // biases stay zero
}

}  // namespace

NodeState zero_state(int hidden, CellKind kind) {
    NodeState s;
    s.h = Vector::Zero(hidden);
    if (kind == CellKind::lstm) s.c = Vector::Zero(hidden);
    return s;
}

StateGrad zero_state_grad(int hidden, CellKind kind) {
    StateGrad g;
    g.dh = Vector::Zero(hidden);
    if (kind == CellKind::lstm) g.dc = Vector::Zero(hidden);
    return g;
}

TreeCellParams make_tree_cell(CellKind kind, bool tagged, int word_dim, int tag_dim, int hidden) {
    TreeCellParams p;
    p.kind = kind;
    p.tagged = tagged;
    p.word_dim = word_dim;
    p.tag_dim = tag_dim;
    p.hidden = hidden;
    const int n = gate_count(kind);
    const int candidate = (kind == CellKind::lstm) ? gate::U : gate::H;
    for (int g = 0; g < n; ++g) {
        // tag matrices on the gates only, never on the candidate
        int mt = (tagged && g != candidate) ? tag_dim : 0;
        p.gates.push_back(make_gate(hidden, word_dim, 2 * hidden, mt));
    }
    return p;
}

SeqCellParams make_seq_cell(CellKind kind, int word_dim, int hidden) {
    SeqCellParams p;
    p.kind = kind;
    p.word_dim = word_dim;
    p.hidden = hidden;
    for (int g = 0; g < gate_count(kind); ++g)
        p.gates.push_back(make_gate(hidden, word_dim, hidden, 0));
    return p;
}

void init_uniform(TreeCellParams& p, Rng& rng, double scale) {
    for (auto& g : p.gates) init_gate(g, rng, scale);
}

void init_uniform(SeqCellParams& p, Rng& rng, double scale) {
    for (auto& g : p.gates) init_gate(g, rng, scale);
}

NodeState tree_lstm_compose(const Vector* x, const Vector* t, const NodeState& left,
                            const NodeState& right, const TreeCellParams& p) {
    check_inputs(p, x, t, "tree_lstm_compose");
    check_state(left, p.hidden, p.kind, "tree_lstm_compose");
    check_state(right, p.hidden, p.kind, "tree_lstm_compose");

    Vector hc = concat(left.h, right.h);
    NodeState s;
    s.i = sigmoid(gate_preactivation(p.gates[gate::I], x, t, hc));
    s.f = sigmoid(gate_preactivation(p.gates[gate::F], x, t, hc));
    s.o = sigmoid(gate_preactivation(p.gates[gate::O], x, t, hc));
    s.u = tanh(gate_preactivation(p.gates[gate::U], x, t, hc));
    // one forget gate for both children
    s.c = hadamard(s.i, s.u) + hadamard(s.f, left.c) + hadamard(s.f, right.c);
    s.h = hadamard(s.o, tanh(s.c));
    return s;
}

NodeState tree_gru_compose(const Vector* x, const Vector* t, const NodeState& left,
                           const NodeState& right, const TreeCellParams& p) {
    check_inputs(p, x, t, "tree_gru_compose");
    check_state(left, p.hidden, p.kind, "tree_gru_compose");
    check_state(right, p.hidden, p.kind, "tree_gru_compose");

    Vector hc = concat(left.h, right.h);
    NodeState s;
    s.r = sigmoid(gate_preactivation(p.gates[gate::R], x, t, hc));
    s.z = sigmoid(gate_preactivation(p.gates[gate::Z], x, t, hc));
    // the reset gate rescales both children before the candidate sees them
    Vector hrc = concat(hadamard(left.h, s.r), hadamard(right.h, s.r));
    s.hcand = tanh(gate_preactivation(p.gates[gate::H], x, nullptr, hrc));
    s.h = hadamard(s.z, s.hcand) +
          hadamard(Vector::Ones(p.hidden) - s.z, left.h + right.h);
    return s;
}

NodeState seq_step_lstm(const Vector& x, const NodeState& prev, const SeqCellParams& p) {
    check_state(prev, p.hidden, p.kind, "seq_step_lstm");
    if (x.size() != p.word_dim) throw ShapeError("seq_step_lstm: word input size mismatch");

    NodeState s;
    s.i = sigmoid(gate_preactivation(p.gates[gate::I], &x, nullptr, prev.h));
    s.f = sigmoid(gate_preactivation(p.gates[gate::F], &x, nullptr, prev.h));
    s.o = sigmoid(gate_preactivation(p.gates[gate::O], &x, nullptr, prev.h));
    s.u = tanh(gate_preactivation(p.gates[gate::U], &x, nullptr, prev.h));
    s.c = hadamard(s.i, s.u) + hadamard(s.f, prev.c);
    s.h = hadamard(s.o, tanh(s.c));
    return s;
}

NodeState seq_step_gru(const Vector& x, const NodeState& prev, const SeqCellParams& p) {
    check_state(prev, p.hidden, p.kind, "seq_step_gru");
    if (x.size() != p.word_dim) throw ShapeError("seq_step_gru: word input size mismatch");

    NodeState s;
    s.r = sigmoid(gate_preactivation(p.gates[gate::R], &x, nullptr, prev.h));
    s.z = sigmoid(gate_preactivation(p.gates[gate::Z], &x, nullptr, prev.h));
    Vector hr = hadamard(prev.h, s.r);
    s.hcand = tanh(gate_preactivation(p.gates[gate::H], &x, nullptr, hr));
    s.h = hadamard(s.z, s.hcand) + hadamard(Vector::Ones(p.hidden) - s.z, prev.h);
    return s;
}

void tree_cell_backward(const StateGrad& out, const NodeState& cached, const Vector* x,
                        const Vector* t, const NodeState& left, const NodeState& right,
                        const TreeCellParams& p, TreeCellParams& grads, Vector* dx, Vector* dt,
                        StateGrad& dleft, StateGrad& dright) {
    if (!cached.has_cache()) throw StateError("tree_cell_backward: missing forward cache");
    check_inputs(p, x, t, "tree_cell_backward");
    const int d = p.hidden;
    Vector hc = concat(left.h, right.h);
    Vector dhc = Vector::Zero(2 * d);

    if (p.kind == CellKind::lstm) {
        Vector tc = tanh(cached.c);
        Vector do_ = hadamard(out.dh, tc);
        Vector dc = out.dc + tanh_backward(tc, hadamard(out.dh, cached.o));
        Vector di = hadamard(dc, cached.u);
        Vector du = hadamard(dc, cached.i);
        Vector df = hadamard(dc, left.c + right.c);
        dleft.dc += hadamard(dc, cached.f);
        dright.dc += hadamard(dc, cached.f);

        scatter_gate(p.gates[gate::I], grads.gates[gate::I], sigmoid_backward(cached.i, di), x, t,
                     hc, dx, dt, dhc);
        scatter_gate(p.gates[gate::F], grads.gates[gate::F], sigmoid_backward(cached.f, df), x, t,
                     hc, dx, dt, dhc);
        scatter_gate(p.gates[gate::O], grads.gates[gate::O], sigmoid_backward(cached.o, do_), x, t,
                     hc, dx, dt, dhc);
        scatter_gate(p.gates[gate::U], grads.gates[gate::U], tanh_backward(cached.u, du), x, t, hc,
                     dx, dt, dhc);
    } else {
        Vector dz = hadamard(out.dh, cached.hcand - (left.h + right.h));
        Vector dhcand = hadamard(out.dh, cached.z);
        Vector done_minus_z = out.dh - hadamard(out.dh, cached.z);  // dh * (1-z)
        dleft.dh += done_minus_z;
        dright.dh += done_minus_z;

        Vector da_h = tanh_backward(cached.hcand, dhcand);
        Vector hrc = concat(hadamard(left.h, cached.r), hadamard(right.h, cached.r));
        Vector dhrc = Vector::Zero(2 * d);
        scatter_gate(p.gates[gate::H], grads.gates[gate::H], da_h, x, nullptr, hrc, dx, nullptr,
                     dhrc);
        auto [dgl, dgr] = concat_backward(dhrc, d);
        dleft.dh += hadamard(dgl, cached.r);
        dright.dh += hadamard(dgr, cached.r);
        Vector dr = hadamard(dgl, left.h) + hadamard(dgr, right.h);

        scatter_gate(p.gates[gate::R], grads.gates[gate::R], sigmoid_backward(cached.r, dr), x, t,
                     hc, dx, dt, dhc);
        scatter_gate(p.gates[gate::Z], grads.gates[gate::Z], sigmoid_backward(cached.z, dz), x, t,
                     hc, dx, dt, dhc);
    }

    auto [dhl, dhr] = concat_backward(dhc, d);
    dleft.dh += dhl;
    dright.dh += dhr;
}

void seq_step_backward(const StateGrad& out, const NodeState& cached, const Vector& x,
                       const NodeState& prev, const SeqCellParams& p, SeqCellParams& grads,
                       Vector& dx, StateGrad& dprev) {
    if (!cached.has_cache()) throw StateError("seq_step_backward: missing forward cache");
    Vector dh_prev = Vector::Zero(p.hidden);

    if (p.kind == CellKind::lstm) {
        Vector tc = tanh(cached.c);
        Vector do_ = hadamard(out.dh, tc);
        Vector dc = out.dc + tanh_backward(tc, hadamard(out.dh, cached.o));
        Vector di = hadamard(dc, cached.u);
        Vector du = hadamard(dc, cached.i);
        Vector df = hadamard(dc, prev.c);
        dprev.dc += hadamard(dc, cached.f);

        scatter_gate(p.gates[gate::I], grads.gates[gate::I], sigmoid_backward(cached.i, di), &x,
                     nullptr, prev.h, &dx, nullptr, dh_prev);
        scatter_gate(p.gates[gate::F], grads.gates[gate::F], sigmoid_backward(cached.f, df), &x,
                     nullptr, prev.h, &dx, nullptr, dh_prev);
        scatter_gate(p.gates[gate::O], grads.gates[gate::O], sigmoid_backward(cached.o, do_), &x,
                     nullptr, prev.h, &dx, nullptr, dh_prev);
        scatter_gate(p.gates[gate::U], grads.gates[gate::U], tanh_backward(cached.u, du), &x,
                     nullptr, prev.h, &dx, nullptr, dh_prev);
    } else {
        Vector dz = hadamard(out.dh, cached.hcand - prev.h);
        Vector dhcand = hadamard(out.dh, cached.z);
        dprev.dh += out.dh - hadamard(out.dh, cached.z);

        Vector da_h = tanh_backward(cached.hcand, dhcand);
        Vector hr = hadamard(prev.h, cached.r);
        Vector dhr = Vector::Zero(p.hidden);
        scatter_gate(p.gates[gate::H], grads.gates[gate::H], da_h, &x, nullptr, hr, &dx, nullptr,
                     dhr);
        dprev.dh += hadamard(dhr, cached.r);
        Vector dr = hadamard(dhr, prev.h);

        scatter_gate(p.gates[gate::R], grads.gates[gate::R], sigmoid_backward(cached.r, dr), &x,
                     nullptr, prev.h, &dx, nullptr, dh_prev);
        scatter_gate(p.gates[gate::Z], grads.gates[gate::Z], sigmoid_backward(cached.z, dz), &x,
                     nullptr, prev.h, &dx, nullptr, dh_prev);
    }

    dprev.dh += dh_prev;
}

}  // namespace treerel
