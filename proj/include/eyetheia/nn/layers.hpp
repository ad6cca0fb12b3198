#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "eyetheia/nn/tensor.hpp"

namespace eyetheia::nn {

// Layer descriptions. Spatial tensors are N x C x H x W, feature tensors N x F.

struct Conv2D {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;  // zero padding on every side
};

struct MaxPool2D {
    std::size_t window = 2;
    std::size_t stride = 2;
};

struct ReLU {};

struct FullyConnected {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
};

// Concatenation of N x F_i feature tensors along axis 1.
struct Concat {};

// N x C x H x W -> N x (C*H*W).
struct Flatten {};

using LayerSpec = std::variant<Conv2D, MaxPool2D, ReLU, FullyConnected, Concat, Flatten>;

std::string layer_kind_name(const LayerSpec& spec);

// Statically computed output shape; throws ShapeError when the inputs do not fit the spec.
Shape output_shape(const LayerSpec& spec, std::span<const Shape> inputs);
Shape output_shape(const LayerSpec& spec, const Shape& input);

bool has_parameters(const LayerSpec& spec);
Shape weight_shape(const LayerSpec& spec);
Shape bias_shape(const LayerSpec& spec);
std::size_t fan_in(const LayerSpec& spec);

enum class ConvAlgorithm { Im2col, Direct };

template <typename T>
struct LayerParams {
    const BasicTensor<T>* weights = nullptr;
    const BasicTensor<T>* bias = nullptr;
};

// State retained by forward() for the matching backward() call.
template <typename T>
struct ForwardContext {
    LayerSpec spec;
    std::vector<Shape> input_shapes;
    BasicTensor<T> input;                 // Conv2D, FullyConnected, ReLU
    std::vector<std::size_t> argmax;      // MaxPool2D: flat input index per output element
    bool ready = false;
};

template <typename T>
struct LayerGradients {
    std::vector<BasicTensor<T>> input_grads;  // one per forward input
    BasicTensor<T> grad_weights;              // empty when the layer has no parameters
    BasicTensor<T> grad_bias;
};

template <typename T>
BasicTensor<T> forward(const LayerSpec& spec, const LayerParams<T>& params,
                       std::span<const BasicTensor<T>> inputs, ForwardContext<T>* ctx = nullptr,
                       ConvAlgorithm algorithm = ConvAlgorithm::Im2col);

template <typename T>
BasicTensor<T> forward(const LayerSpec& spec, const LayerParams<T>& params, const BasicTensor<T>& input,
                       ForwardContext<T>* ctx = nullptr, ConvAlgorithm algorithm = ConvAlgorithm::Im2col) {
    return forward<T>(spec, params, std::span<const BasicTensor<T>>(&input, 1), ctx, algorithm);
}

template <typename T>
LayerGradients<T> backward(const ForwardContext<T>& ctx, const LayerParams<T>& params,
                           const BasicTensor<T>& upstream_grad);

// Row-major GEMM: C (m x n) = op(A) * op(B) (+ C when accumulate).
// op(A) is m x k, op(B) is k x n; A and B are stored densely (k x m / n x k when transposed).
template <typename T>
void gemm(bool transpose_a, bool transpose_b, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c, bool accumulate);

}  // namespace eyetheia::nn
