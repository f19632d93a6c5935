#include "treerel/classifier.hpp"

#include <cmath>
#include <numeric>

#include "treerel/errors.hpp"

namespace treerel {

Vector predict(const Vector& r1, const Vector& r2, const Matrix& cls_W, const Vector& cls_b) {
    return softmax(affine(cls_W, concat(r1, r2), cls_b));
}

double cross_entropy(const Vector& yhat, int gold) {
    if (gold < 0 || gold >= yhat.size())
        throw InvalidArgument("cross_entropy: gold label " + std::to_string(gold) +
                              " out of range for " + std::to_string(yhat.size()) + " classes");
    return -std::log(yhat(gold));
}

Vector softmax_xent_backward(const Vector& yhat, int gold) {
    if (gold < 0 || gold >= yhat.size())
        throw InvalidArgument("softmax_xent_backward: gold label out of range");
    Vector d = yhat;
    d(gold) -= 1.0;
    return d;
}

double objective(const std::vector<double>& losses, double l2_squared, double lambda) {
    if (losses.empty()) throw InvalidArgument("objective: empty batch");
    double mean = std::accumulate(losses.begin(), losses.end(), 0.0) /
                  static_cast<double>(losses.size());
    return mean + 0.5 * lambda * l2_squared;
}

}  // namespace treerel
