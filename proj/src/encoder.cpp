#include "treerel/encoder.hpp"

#include "treerel/errors.hpp"

namespace treerel {

namespace {

int flatten(const BinaryTree& t, const Vocab& vocab, std::vector<EncNode>& nodes) {
    EncNode n;
    n.tag_id = vocab.tag_id(t.tag);
    if (t.is_leaf()) {
        n.word_id = vocab.word_id(t.word);
    } else {
        n.left = flatten(*t.left, vocab, nodes);
        n.right = flatten(*t.right, vocab, nodes);
    }
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
}

void leaf_sequence(const BinaryTree& t, const Vocab& vocab, std::vector<int>& ids) {
    if (t.is_leaf()) {
        ids.push_back(vocab.word_id(t.word));
        return;
    }
    leaf_sequence(*t.left, vocab, ids);
    leaf_sequence(*t.right, vocab, ids);
}

}  // namespace

EncodedArgument encode_argument(const BinaryTree& tree, const ModelParams& params,
                                const Vocab& vocab) {
    EncodedArgument enc;
    enc.mode = params.mode;
    const bool tagged = mode_is_tagged(params.mode);

    if (mode_is_tree(params.mode)) {
        flatten(tree, vocab, enc.nodes);
        const NodeState zero = zero_state(params.hidden, params.cell.kind);
        Vector x, t;
        for (EncNode& n : enc.nodes) {
            const bool leaf = n.word_id >= 0;
            if (leaf) x = params.word_emb.row(n.word_id).transpose();
            if (tagged) t = params.tag_emb.row(n.tag_id).transpose();
            const Vector* xp = leaf ? &x : nullptr;
            const Vector* tp = tagged ? &t : nullptr;
            const NodeState& l = leaf ? zero : enc.nodes[n.left].state;
            const NodeState& r = leaf ? zero : enc.nodes[n.right].state;
            n.state = (params.cell.kind == CellKind::lstm)
                          ? tree_lstm_compose(xp, tp, l, r, params.cell)
                          : tree_gru_compose(xp, tp, l, r, params.cell);
        }
        enc.r = enc.nodes.back().state.h;
        return enc;
    }

    // bidirectional baseline over the leaf word sequence
    leaf_sequence(tree, vocab, enc.word_ids);
    if (enc.word_ids.empty()) throw InvalidArgument("encode_argument: empty tree");
    const size_t n = enc.word_ids.size();
    const CellKind kind = params.seq_fwd.kind;
    NodeState prev = zero_state(params.hidden, kind);
    for (size_t k = 0; k < n; ++k) {
        Vector x = params.word_emb.row(enc.word_ids[k]).transpose();
        prev = (kind == CellKind::lstm) ? seq_step_lstm(x, prev, params.seq_fwd)
                                        : seq_step_gru(x, prev, params.seq_fwd);
        enc.fwd.push_back(prev);
    }
    prev = zero_state(params.hidden, kind);
    for (size_t k = n; k-- > 0;) {
        Vector x = params.word_emb.row(enc.word_ids[k]).transpose();
        prev = (kind == CellKind::lstm) ? seq_step_lstm(x, prev, params.seq_bwd)
                                        : seq_step_gru(x, prev, params.seq_bwd);
        enc.bwd.push_back(prev);  // bwd[j] is the state after consuming token n-1-j
    }
    enc.r = concat(enc.fwd.back().h, enc.bwd.back().h);
    return enc;
}

void encoder_backward(const Vector& d_r, const EncodedArgument& enc, const ModelParams& params,
                      ModelGrads& grads) {
    const bool tagged = mode_is_tagged(params.mode);
    const int d = params.hidden;

    if (mode_is_tree(params.mode)) {
        if (enc.nodes.empty()) throw StateError("encoder_backward: no cached nodes");
        const CellKind kind = params.cell.kind;
        const NodeState zero = zero_state(d, kind);
        std::vector<StateGrad> sg(enc.nodes.size());
        for (auto& g : sg) g = zero_state_grad(d, kind);
        sg.back().dh = d_r;

        StateGrad discard = zero_state_grad(d, kind);
        Vector x, t, dx, dt;
        for (size_t idx = enc.nodes.size(); idx-- > 0;) {
            const EncNode& n = enc.nodes[idx];
            const bool leaf = n.word_id >= 0;
            if (leaf) {
                x = params.word_emb.row(n.word_id).transpose();
                dx = Vector::Zero(params.word_dim);
            }
            if (tagged) {
                t = params.tag_emb.row(n.tag_id).transpose();
                dt = Vector::Zero(params.tag_dim);
            }
            const NodeState& l = leaf ? zero : enc.nodes[n.left].state;
            const NodeState& r = leaf ? zero : enc.nodes[n.right].state;
            StateGrad& dl = leaf ? discard : sg[n.left];
            StateGrad& dr = leaf ? discard : sg[n.right];
            tree_cell_backward(sg[idx], n.state, leaf ? &x : nullptr, tagged ? &t : nullptr, l, r,
                               params.cell, grads.g.cell, leaf ? &dx : nullptr,
                               tagged ? &dt : nullptr, dl, dr);
            if (leaf) {
                grads.add_word_row(n.word_id, dx);
                // gradients into the zero leaf states drop here
                discard.dh.setZero();
                if (kind == CellKind::lstm) discard.dc.setZero();
            }
            if (tagged) grads.add_tag_row(n.tag_id, dt);
        }
        return;
    }

    // baselines: split the concatenated representation, then BPTT both ways
    if (enc.fwd.empty()) throw StateError("encoder_backward: no cached sequence states");
    const CellKind kind = params.seq_fwd.kind;
    const size_t n = enc.word_ids.size();
    const NodeState zero = zero_state(d, kind);

    auto run_dir = [&](const std::vector<NodeState>& states, const SeqCellParams& p,
                       SeqCellParams& pg, const Vector& d_last, bool forward_dir) {
        StateGrad cur = zero_state_grad(d, kind);
        cur.dh = d_last;
        Vector x, dx;
        for (size_t j = states.size(); j-- > 0;) {
            // token index this step consumed
            size_t tok = forward_dir ? j : n - 1 - j;
            x = params.word_emb.row(enc.word_ids[tok]).transpose();
            dx = Vector::Zero(params.word_dim);
            const NodeState& prev = (j == 0) ? zero : states[j - 1];
            StateGrad dprev = zero_state_grad(d, kind);
            seq_step_backward(cur, states[j], x, prev, p, pg, dx, dprev);
            grads.add_word_row(enc.word_ids[tok], dx);
            cur = std::move(dprev);
        }
    };

    run_dir(enc.fwd, params.seq_fwd, grads.g.seq_fwd, d_r.head(d), true);
    run_dir(enc.bwd, params.seq_bwd, grads.g.seq_bwd, d_r.tail(d), false);
}

}  // namespace treerel
