#include "treerel/numerics.hpp"

namespace treerel {

Vector affine(const Matrix& W, const Vector& x, const Vector& b) {
    if (W.cols() != x.size())
        throw ShapeError("affine: W is " + std::to_string(W.rows()) + "x" +
                         std::to_string(W.cols()) + " but x has " + std::to_string(x.size()));
    if (W.rows() != b.size())
        throw ShapeError("affine: W has " + std::to_string(W.rows()) + " rows but b has " +
                         std::to_string(b.size()));
    return W * x + b;
}

AffineGrads affine_backward(const Matrix& W, const Vector& x, const Vector& grad_out) {
    if (grad_out.size() != W.rows()) throw ShapeError("affine_backward: gradient size mismatch");
    AffineGrads g;
    g.dW.noalias() = grad_out * x.transpose();
    g.dx.noalias() = W.transpose() * grad_out;
    g.db = grad_out;
    return g;
}

Vector sigmoid(const Vector& v) {
    return 1.0 / (1.0 + (-v.array()).exp());
}

Vector tanh(const Vector& v) {
    return v.array().tanh();
}

Vector hadamard(const Vector& a, const Vector& b) {
    check_same_size(a, b, "hadamard");
    return a.cwiseProduct(b);
}

Vector sigmoid_backward(const Vector& y, const Vector& gy) {
    check_same_size(y, gy, "sigmoid_backward");
    return gy.array() * y.array() * (1.0 - y.array());
}

Vector tanh_backward(const Vector& y, const Vector& gy) {
    check_same_size(y, gy, "tanh_backward");
    return gy.array() * (1.0 - y.array().square());
}

std::pair<Vector, Vector> hadamard_backward(const Vector& a, const Vector& b, const Vector& gy) {
    check_same_size(a, b, "hadamard_backward");
    check_same_size(a, gy, "hadamard_backward");
    return {gy.cwiseProduct(b), gy.cwiseProduct(a)};
}

Vector softmax(const Vector& v) {
    if (v.size() == 0) throw ShapeError("softmax: empty vector");
    Vector e = (v.array() - v.maxCoeff()).exp();
    return e / e.sum();
}

Vector softmax_backward(const Vector& y, const Vector& gy) {
    check_same_size(y, gy, "softmax_backward");
    return y.array() * (gy.array() - gy.dot(y));
}

Vector concat(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out.head(a.size()) = a;
    out.tail(b.size()) = b;
    return out;
}

std::pair<Vector, Vector> concat_backward(const Vector& grad_out, Index p) {
    if (p < 0 || p > grad_out.size()) throw ShapeError("concat_backward: bad split point");
    return {grad_out.head(p), grad_out.tail(grad_out.size() - p)};
}

}  // namespace treerel
