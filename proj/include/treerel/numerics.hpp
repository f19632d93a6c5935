#pragma once

#include <utility>

#include "treerel/errors.hpp"
#include "treerel/types.hpp"

namespace treerel {

// Dense kernels used by the cells and the classifier. Every forward kernel
// has a reverse-mode companion; backwards are written in terms of the forward
// OUTPUT where the math allows it (sigmoid, tanh, softmax).

Vector affine(const Matrix& W, const Vector& x, const Vector& b);

struct AffineGrads {
    Matrix dW;
    Vector dx;
    Vector db;
};
AffineGrads affine_backward(const Matrix& W, const Vector& x, const Vector& grad_out);

Vector sigmoid(const Vector& v);
Vector tanh(const Vector& v);
Vector hadamard(const Vector& a, const Vector& b);

// gy * y * (1-y), y = sigmoid(pre)
Vector sigmoid_backward(const Vector& y, const Vector& gy);
// gy * (1 - y^2), y = tanh(pre)
Vector tanh_backward(const Vector& y, const Vector& gy);
// d(a*b) -> (gy*b, gy*a)
std::pair<Vector, Vector> hadamard_backward(const Vector& a, const Vector& b, const Vector& gy);

// Stabilized by max subtraction; entries positive, sums to 1.
Vector softmax(const Vector& v);
// VJP through softmax: y .* (gy - dot(gy, y))
Vector softmax_backward(const Vector& y, const Vector& gy);

Vector concat(const Vector& a, const Vector& b);
// splits the incoming gradient at p = len(a)
std::pair<Vector, Vector> concat_backward(const Vector& grad_out, Index p);

inline void check_same_size(const Vector& a, const Vector& b, const char* op) {
    if (a.size() != b.size())
        throw ShapeError(std::string(op) + ": size mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
}

}  // namespace treerel
