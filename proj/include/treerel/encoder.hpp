#pragma once

#include "treerel/corpus.hpp"
#include "treerel/model.hpp"
#include "treerel/tree.hpp"

namespace treerel {

// Post-order node table; children precede parents, the root is last.
struct EncNode {
    int left = -1, right = -1;  // indices into nodes; -1 at leaves
    int word_id = -1;           // >= 0 iff leaf
    int tag_id = -1;
    NodeState state;
};

struct EncodedArgument {
    EncoderMode mode = EncoderMode::tree_lstm;
    Vector r;                       // root h, or [h_fwd_last, h_bwd_last]
    std::vector<EncNode> nodes;     // tree modes
    std::vector<NodeState> fwd, bwd;  // baseline passes
    std::vector<int> word_ids;      // leaf sequence (baseline modes)
};

// Bottom-up pass with the mode's cell; leaves get their word embedding as x,
// internal nodes a zero x, tag modes additionally the node's tag embedding.
// Baselines ignore the structure and run over the leaf sequence both ways.
EncodedArgument encode_argument(const BinaryTree& tree, const ModelParams& params,
                                const Vocab& vocab);

// Reverse pass; parameter and embedding-row gradients accumulate into grads.
void encoder_backward(const Vector& d_r, const EncodedArgument& enc, const ModelParams& params,
                      ModelGrads& grads);

}  // namespace treerel
