#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "eyetheia/nn/layers.hpp"
#include "eyetheia/nn/tensor.hpp"

namespace eyetheia::nn {

template <typename T>
struct LayerParameters {
    BasicTensor<T> weights;
    BasicTensor<T> bias;
    BasicTensor<T> grad_weights;
    BasicTensor<T> grad_bias;

    LayerParams<T> view() const { return {&weights, &bias}; }
};

// layer name -> parameters; ordered so iteration (and serialization) is deterministic.
template <typename T>
class BasicParamSet {
public:
    using Map = std::map<std::string, LayerParameters<T>>;

    // Registers zero-initialized parameters for a parameterized layer.
    LayerParameters<T>& add(const std::string& name, const LayerSpec& spec);

    bool contains(const std::string& name) const { return layers_.count(name) != 0; }
    LayerParameters<T>& at(const std::string& name);
    const LayerParameters<T>& at(const std::string& name) const;

    Map& layers() { return layers_; }
    const Map& layers() const { return layers_; }

    void zero_grad();
    std::size_t parameter_count() const;

    // Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero bias.
    void init_kaiming_uniform(std::uint64_t seed);

    template <typename U>
    BasicParamSet<U> cast() const {
        BasicParamSet<U> out;
        for (const auto& [name, p] : layers_) {
            auto& q = out.layers()[name];
            q.weights = p.weights.template cast<U>();
            q.bias = p.bias.template cast<U>();
            q.grad_weights = p.grad_weights.template cast<U>();
            q.grad_bias = p.grad_bias.template cast<U>();
        }
        return out;
    }

    friend bool operator==(const BasicParamSet& a, const BasicParamSet& b) {
        if (a.layers_.size() != b.layers_.size()) return false;
        for (const auto& [name, p] : a.layers_) {
            auto it = b.layers_.find(name);
            if (it == b.layers_.end()) return false;
            if (!(p.weights == it->second.weights) || !(p.bias == it->second.bias)) return false;
        }
        return true;
    }

private:
    Map layers_;
};

using ParamSet = BasicParamSet<float>;

// Deterministic uniform [0, 1) from a 64-bit engine, independent of the standard library's distributions.
double unit_uniform(std::uint64_t& state);

}  // namespace eyetheia::nn
