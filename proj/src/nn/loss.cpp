#include "eyetheia/nn/loss.hpp"

#include <cmath>

namespace eyetheia::nn {

namespace {

template <typename T>
void check_pair(const char* who, const BasicTensor<T>& pred, const BasicTensor<T>& target) {
    if (pred.rank() != 2 || pred.dim(1) != 2) {
        throw ShapeError(std::string(who) + ": predictions must be N x 2, got " + shape_str(pred.shape()));
    }
    if (pred.shape() != target.shape()) {
        throw ShapeError(std::string(who) + ": prediction shape " + shape_str(pred.shape()) +
                         " differs from target shape " + shape_str(target.shape()));
    }
}

}  // namespace

template <typename T>
LossResult<T> loss_euclidean(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
    if (pred.empty() || target.empty()) throw ShapeError("loss_euclidean: empty batch");
    check_pair("loss_euclidean", pred, target);
    const std::size_t n = pred.dim(0);
    LossResult<T> out{T{0}, BasicTensor<T>::zeros_like(pred)};
    T sum{0};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T d = pred[i] - target[i];
        sum += d * d;
        out.grad[i] = T{2} * d / static_cast<T>(n);
    }
    out.value = sum / static_cast<T>(n);
    return out;
}

template <typename T>
LossResult<T> loss_smooth_l1(const BasicTensor<T>& pred, const BasicTensor<T>& target, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("loss_smooth_l1: beta must be > 0");
    if (pred.empty() || target.empty()) throw ShapeError("loss_smooth_l1: empty batch");
    check_pair("loss_smooth_l1", pred, target);
    const T b = static_cast<T>(beta);
    const T count = static_cast<T>(pred.size());
    LossResult<T> out{T{0}, BasicTensor<T>::zeros_like(pred)};
    T sum{0};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T r = target[i] - pred[i];
        const T a = std::abs(r);
        T dr;  // dL/dr
        if (a < b) {
            sum += r * r / (T{2} * b);
            dr = r / b;
        } else {
            sum += a - b / T{2};
            dr = r > T{0} ? T{1} : T{-1};
        }
        out.grad[i] = -dr / count;  // dr/dpred = -1
    }
    out.value = sum / count;
    return out;
}

template <typename T>
LossResult<T> compute_loss(const LossConfig& config, const BasicTensor<T>& pred, const BasicTensor<T>& target) {
    if (config.kind == LossKind::SmoothL1) return loss_smooth_l1(pred, target, config.beta);
    return loss_euclidean(pred, target);
}

#define EYETHEIA_INSTANTIATE_LOSS(T)                                                                \
    template LossResult<T> loss_euclidean<T>(const BasicTensor<T>&, const BasicTensor<T>&);        \
    template LossResult<T> loss_smooth_l1<T>(const BasicTensor<T>&, const BasicTensor<T>&, double); \
    template LossResult<T> compute_loss<T>(const LossConfig&, const BasicTensor<T>&, const BasicTensor<T>&);

EYETHEIA_INSTANTIATE_LOSS(float)
EYETHEIA_INSTANTIATE_LOSS(double)

}  // namespace eyetheia::nn
