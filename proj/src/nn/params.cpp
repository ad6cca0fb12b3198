#include "eyetheia/nn/params.hpp"

#include <cmath>

namespace eyetheia::nn {

double unit_uniform(std::uint64_t& state) {
    // splitmix64
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

template <typename T>
LayerParameters<T>& BasicParamSet<T>::add(const std::string& name, const LayerSpec& spec) {
    if (!has_parameters(spec)) throw ShapeError("layer '" + name + "' (" + layer_kind_name(spec) + ") has no parameters");
    if (layers_.count(name)) throw ShapeError("duplicate parameter layer '" + name + "'");
    auto& p = layers_[name];
    p.weights = BasicTensor<T>(weight_shape(spec));
    p.bias = BasicTensor<T>(bias_shape(spec));
    p.grad_weights = BasicTensor<T>(weight_shape(spec));
    p.grad_bias = BasicTensor<T>(bias_shape(spec));
    return p;
}

template <typename T>
LayerParameters<T>& BasicParamSet<T>::at(const std::string& name) {
    auto it = layers_.find(name);
    if (it == layers_.end()) throw ShapeError("unknown parameter layer '" + name + "'");
    return it->second;
}

template <typename T>
const LayerParameters<T>& BasicParamSet<T>::at(const std::string& name) const {
    auto it = layers_.find(name);
    if (it == layers_.end()) throw ShapeError("unknown parameter layer '" + name + "'");
    return it->second;
}

template <typename T>
void BasicParamSet<T>::zero_grad() {
    for (auto& [_, p] : layers_) {
        p.grad_weights.fill(T{0});
        p.grad_bias.fill(T{0});
    }
}

template <typename T>
std::size_t BasicParamSet<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : layers_) n += p.weights.size() + p.bias.size();
    return n;
}

template <typename T>
void BasicParamSet<T>::init_kaiming_uniform(std::uint64_t seed) {
    std::uint64_t state = seed;
    for (auto& [_, p] : layers_) {
        // leading dim is out_channels / out_features, the rest is fan-in
        const std::size_t fan = p.weights.size() / p.weights.dim(0);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan));
        for (auto& w : p.weights.data()) w = static_cast<T>((2.0 * unit_uniform(state) - 1.0) * bound);
        p.bias.fill(T{0});
    }
}

template class BasicParamSet<float>;
template class BasicParamSet<double>;

}  // namespace eyetheia::nn
