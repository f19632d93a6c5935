#include "treerel/optimizer.hpp"

#include <cmath>

#include "treerel/errors.hpp"

namespace treerel {

AdaGradState::AdaGradState(ModelParams& params, double eta, double eps)
    : learning_rate(eta), epsilon(eps) {
    for (const TensorRef& t : tensor_registry(params)) accum.push_back(Matrix::Zero(t.rows, t.cols));
}

void adagrad_update_dense(Eigen::Map<Eigen::ArrayXd> theta, Eigen::Map<const Eigen::ArrayXd> grad,
                          Eigen::Map<Eigen::ArrayXd> accum, double eta, double eps) {
    if (theta.size() != grad.size() || theta.size() != accum.size())
        throw ShapeError("adagrad_update_dense: size mismatch");
    if (!grad.isFinite().all()) throw NumericsError("adagrad: non-finite gradient");
    accum += grad.square();
    theta -= eta * grad / (accum.sqrt() + eps);
}

void adagrad_update_rows(Matrix& theta, const Matrix& grad, Matrix& accum,
                         const std::vector<int>& rows, double eta, double eps) {
    if (theta.rows() != grad.rows() || theta.cols() != grad.cols() ||
        theta.rows() != accum.rows() || theta.cols() != accum.cols())
        throw ShapeError("adagrad_update_rows: shape mismatch");
    for (int r : rows) {
        if (r < 0 || r >= theta.rows()) throw ShapeError("adagrad_update_rows: row out of range");
        auto g = grad.row(r).array();
        if (!g.isFinite().all()) throw NumericsError("adagrad: non-finite gradient row");
        accum.row(r).array() += g.square();
        theta.row(r).array() -= eta * g / (accum.row(r).array().sqrt() + eps);
    }
}

void AdaGradState::step(ModelParams& params, ModelGrads& grads) {
    std::vector<TensorRef> ps = tensor_registry(params);
    std::vector<TensorRef> gs = tensor_registry(grads.g);
    if (ps.size() != gs.size() || ps.size() != accum.size())
        throw ShapeError("adagrad step: registry/state mismatch");
    grads.finalize_touched();
    for (size_t k = 0; k < ps.size(); ++k) {
        if (ps[k].sparse_rows) {
            const std::vector<int>& rows =
                (ps[k].name == "emb/word") ? grads.touched_words : grads.touched_tags;
            Matrix& theta = (ps[k].name == "emb/word") ? params.word_emb : params.tag_emb;
            const Matrix& g = (ps[k].name == "emb/word") ? grads.g.word_emb : grads.g.tag_emb;
            adagrad_update_rows(theta, g, accum[k], rows, learning_rate, epsilon);
        } else {
            adagrad_update_dense(
                Eigen::Map<Eigen::ArrayXd>(ps[k].data, ps[k].size()),
                Eigen::Map<const Eigen::ArrayXd>(gs[k].data, gs[k].size()),
                Eigen::Map<Eigen::ArrayXd>(accum[k].data(), accum[k].size()), learning_rate,
                epsilon);
        }
    }
}

}  // namespace treerel
