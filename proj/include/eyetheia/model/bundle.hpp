#pragma once

#include <span>

#include "eyetheia/model/config.hpp"
#include "eyetheia/nn/tensor.hpp"

namespace eyetheia::model {

// The network's three-stream input for one frame.
struct InputBundle {
    nn::Tensor left_eye;   // 3 x eye_h x eye_w, mean-subtracted
    nn::Tensor right_eye;  // 3 x eye_h x eye_w, mean-subtracted
    nn::Tensor face;       // 3 x face_h x face_w, mean-subtracted
    nn::Tensor face_grid;  // grid_size * grid_size, values in {0, 1}
};

template <typename T>
struct BatchInput {
    nn::BasicTensor<T> left_eye;   // N x 3 x eye_h x eye_w
    nn::BasicTensor<T> right_eye;
    nn::BasicTensor<T> face;       // N x 3 x face_h x face_w
    nn::BasicTensor<T> face_grid;  // N x grid_size^2

    std::size_t batch() const { return face.dim(0); }
};

// Throws ShapeError if the bundle does not match the config's input sizes.
void check_bundle(const InputBundle& bundle, const ModelConfig& config);

template <typename T>
BatchInput<T> stack(std::span<const InputBundle> bundles, const ModelConfig& config);

}  // namespace eyetheia::model
