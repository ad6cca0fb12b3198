#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "eyetheia/nn/params.hpp"

namespace eyetheia::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamMoments {
    BasicTensor<T> m_weights, v_weights, m_bias, v_bias;
};

template <typename T>
struct BasicAdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::map<std::string, AdamMoments<T>> moments;
};

using AdamState = BasicAdamState<float>;

template <typename T>
BasicAdamState<T> make_adam_state(const BasicParamSet<T>& params, AdamConfig config = {});

// One bias-corrected Adam update using the gradients held in `params`.
// Throws ShapeError if state and params disagree; neither is modified in that case.
template <typename T>
void adam_step(BasicParamSet<T>& params, BasicAdamState<T>& state);

}  // namespace eyetheia::nn
