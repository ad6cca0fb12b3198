#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eyetheia/gaze_point.hpp"
#include "eyetheia/model/bundle.hpp"
#include "eyetheia/model/config.hpp"
#include "eyetheia/nn/layers.hpp"
#include "eyetheia/nn/params.hpp"

namespace eyetheia::model {

struct NamedLayer {
    std::string name;  // parameter-set key for parameterized layers
    nn::LayerSpec spec;
};

// Linear chain of layers sharing one parameter set.
class Sequential {
public:
    Sequential() = default;
    explicit Sequential(std::vector<NamedLayer> layers) : layers_(std::move(layers)) {}

    const std::vector<NamedLayer>& layers() const { return layers_; }
    nn::Shape output_shape(nn::Shape input) const;

    template <typename T>
    nn::BasicTensor<T> forward(const nn::BasicParamSet<T>& params, nn::BasicTensor<T> input,
                               std::vector<nn::ForwardContext<T>>* contexts) const;

    // Accumulates parameter gradients into `params`, returns the gradient w.r.t. the chain input.
    template <typename T>
    nn::BasicTensor<T> backward(nn::BasicParamSet<T>& params, const std::vector<nn::ForwardContext<T>>& contexts,
                                nn::BasicTensor<T> upstream) const;

private:
    std::vector<NamedLayer> layers_;
};

// Everything forward() keeps for backward().
template <typename T>
struct ForwardTrace {
    std::vector<nn::ForwardContext<T>> left_eye, right_eye, face, grid, eye_head, fusion;
    nn::ForwardContext<T> eye_concat, fusion_concat;
};

// Three-branch gaze regressor: shared-weight eye CNN, face CNN, face-grid MLP, fused by two FC layers.
template <typename T>
class BasicGazeNet {
public:
    BasicGazeNet() = default;
    // Kaiming-uniform initialization from `seed`.
    BasicGazeNet(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    nn::BasicParamSet<T>& params() { return params_; }
    const nn::BasicParamSet<T>& params() const { return params_; }

    const Sequential& eye_branch() const { return eye_branch_; }
    const Sequential& face_branch() const { return face_branch_; }
    const Sequential& grid_branch() const { return grid_branch_; }
    const Sequential& eye_head() const { return eye_head_; }
    const Sequential& fusion_head() const { return fusion_head_; }

    // N x 2 raw outputs in the model's output space.
    nn::BasicTensor<T> forward(const BatchInput<T>& input, ForwardTrace<T>* trace = nullptr) const;
    // Accumulates gradients of the loss (given dLoss/dOutput, N x 2) into params().
    void backward(const ForwardTrace<T>& trace, const nn::BasicTensor<T>& output_grad);

    // Unclamped single-sample output.
    std::pair<double, double> predict_raw(const InputBundle& bundle) const;
    // Output tagged with config().output_space and clamped to its range.
    GazePoint predict(const InputBundle& bundle) const;

    template <typename U>
    BasicGazeNet<U> cast() const {
        BasicGazeNet<U> out(config_, 0);
        out.params() = params_.template cast<U>();
        return out;
    }

private:
    ModelConfig config_;
    nn::BasicParamSet<T> params_;
    Sequential eye_branch_, face_branch_, grid_branch_, eye_head_, fusion_head_;
};

using GazeNet = BasicGazeNet<float>;

// Hash of every ReLU active-set and max-pool argmax in a trace: equal signatures mean the two
// evaluations lie in the same piecewise-linear region of the network.
template <typename T>
std::uint64_t regime_signature(const ForwardTrace<T>& trace);

// Sum of weights and biases implied by the config's layer table.
std::size_t parameter_count(const ModelConfig& config);

}  // namespace eyetheia::model
