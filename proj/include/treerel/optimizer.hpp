#pragma once

#include <vector>

#include "treerel/model.hpp"

namespace treerel {

// AdaGrad: G += g*g; theta -= eta * g / (sqrt(G) + eps). Epsilon sits outside
// the root so a first touch never divides by zero.
struct AdaGradState {
    double learning_rate = 0.01;
    double epsilon = 1e-8;
    std::vector<Matrix> accum;  // parallel to tensor_registry(params)

    AdaGradState() = default;
    AdaGradState(ModelParams& params, double eta, double eps = 1e-8);

    // Dense tensors update wholesale; embedding tables only on touched rows.
    // NaN in any used gradient entry is a NumericsError.
    void step(ModelParams& params, ModelGrads& grads);
};

// Element-wise kernels; exposed for direct use and tests.
void adagrad_update_dense(Eigen::Map<Eigen::ArrayXd> theta, Eigen::Map<const Eigen::ArrayXd> grad,
                          Eigen::Map<Eigen::ArrayXd> accum, double eta, double eps);
void adagrad_update_rows(Matrix& theta, const Matrix& grad, Matrix& accum,
                         const std::vector<int>& rows, double eta, double eps);

}  // namespace treerel
