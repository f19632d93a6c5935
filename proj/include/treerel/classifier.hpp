#pragma once

#include <vector>

#include "treerel/model.hpp"
#include "treerel/numerics.hpp"

namespace treerel {

// softmax(W [r1, r2] + b) over the level's label set.
Vector predict(const Vector& r1, const Vector& r2, const Matrix& cls_W, const Vector& cls_b);

// -log(yhat[gold]); the gold distribution is one-hot so the sum collapses.
double cross_entropy(const Vector& yhat, int gold);

// gradient on the logits for the fused softmax + cross-entropy: yhat - onehot
Vector softmax_xent_backward(const Vector& yhat, int gold);

// mean data loss plus (lambda/2) * l2_squared (caller supplies the squared
// norm of the regularized tensor set).
double objective(const std::vector<double>& losses, double l2_squared, double lambda);

}  // namespace treerel
