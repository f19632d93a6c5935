#pragma once

#include <Eigen/Dense>

namespace treerel {

// 64-bit floats throughout; the gradient checks depend on double precision.
using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Lowest index wins on ties.
inline int argmax(const Vector& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

}  // namespace treerel
