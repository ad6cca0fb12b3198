#pragma once

#include "eyetheia/nn/tensor.hpp"

namespace eyetheia::nn {

enum class LossKind { EuclideanMSE, SmoothL1 };

struct LossConfig {
    LossKind kind = LossKind::EuclideanMSE;
    double beta = 1.0;  // SmoothL1 transition point, > 0
};

// Loss value plus its gradient with respect to `pred`.
template <typename T>
struct LossResult {
    T value{};
    BasicTensor<T> grad;
};

// pred, target: N x 2. value = (1/N) sum_i ||pred_i - target_i||^2.
template <typename T>
LossResult<T> loss_euclidean(const BasicTensor<T>& pred, const BasicTensor<T>& target);

// Elementwise Huber with transition beta on r = target - pred, mean over all N*2 elements:
// r^2 / (2 beta) for |r| < beta, |r| - beta / 2 otherwise.
template <typename T>
LossResult<T> loss_smooth_l1(const BasicTensor<T>& pred, const BasicTensor<T>& target, double beta);

template <typename T>
LossResult<T> compute_loss(const LossConfig& config, const BasicTensor<T>& pred, const BasicTensor<T>& target);

}  // namespace eyetheia::nn
