#include "eyetheia/nn/optim.hpp"

#include <cmath>

namespace eyetheia::nn {

template <typename T>
BasicAdamState<T> make_adam_state(const BasicParamSet<T>& params, AdamConfig config) {
    BasicAdamState<T> state;
    state.config = config;
    for (const auto& [name, p] : params.layers()) {
        auto& m = state.moments[name];
        m.m_weights = BasicTensor<T>::zeros_like(p.weights);
        m.v_weights = BasicTensor<T>::zeros_like(p.weights);
        m.m_bias = BasicTensor<T>::zeros_like(p.bias);
        m.v_bias = BasicTensor<T>::zeros_like(p.bias);
    }
    return state;
}

namespace {

template <typename T>
void update(BasicTensor<T>& value, const BasicTensor<T>& grad, BasicTensor<T>& m, BasicTensor<T>& v,
            const AdamConfig& c, double correction1, double correction2) {
    const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
    const T lr = static_cast<T>(c.lr), eps = static_cast<T>(c.eps);
    const T c1 = static_cast<T>(correction1), c2 = static_cast<T>(correction2);
    for (std::size_t i = 0; i < value.size(); ++i) {
        const T g = grad[i];
        m[i] = b1 * m[i] + (T{1} - b1) * g;
        v[i] = b2 * v[i] + (T{1} - b2) * g * g;
        const T m_hat = m[i] / c1;
        const T v_hat = v[i] / c2;
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

}  // namespace

template <typename T>
void adam_step(BasicParamSet<T>& params, BasicAdamState<T>& state) {
    if (state.moments.size() != params.layers().size()) {
        throw ShapeError("adam_step: state tracks " + std::to_string(state.moments.size()) + " layers, params have " +
                         std::to_string(params.layers().size()));
    }
    for (const auto& [name, p] : params.layers()) {
        auto it = state.moments.find(name);
        if (it == state.moments.end()) throw ShapeError("adam_step: no moments for layer '" + name + "'");
        const auto& m = it->second;
        if (p.grad_weights.shape() != p.weights.shape() || p.grad_bias.shape() != p.bias.shape() ||
            m.m_weights.shape() != p.weights.shape() || m.v_weights.shape() != p.weights.shape() ||
            m.m_bias.shape() != p.bias.shape() || m.v_bias.shape() != p.bias.shape()) {
            throw ShapeError("adam_step: shape mismatch in layer '" + name + "'");
        }
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.config.beta1, t);
    const double correction2 = 1.0 - std::pow(state.config.beta2, t);
    for (auto& [name, p] : params.layers()) {
        auto& m = state.moments.at(name);
        update(p.weights, p.grad_weights, m.m_weights, m.v_weights, state.config, correction1, correction2);
        update(p.bias, p.grad_bias, m.m_bias, m.v_bias, state.config, correction1, correction2);
    }
}

template BasicAdamState<float> make_adam_state<float>(const BasicParamSet<float>&, AdamConfig);
template BasicAdamState<double> make_adam_state<double>(const BasicParamSet<double>&, AdamConfig);
template void adam_step<float>(BasicParamSet<float>&, BasicAdamState<float>&);
template void adam_step<double>(BasicParamSet<double>&, BasicAdamState<double>&);

}  // namespace eyetheia::nn
