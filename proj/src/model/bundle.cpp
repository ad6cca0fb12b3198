#include "eyetheia/model/bundle.hpp"

#include <algorithm>

namespace eyetheia::model {

namespace {

void expect_shape(const char* what, const nn::Tensor& t, const nn::Shape& shape) {
    if (t.shape() != shape) {
        throw ShapeError(std::string("bundle ") + what + " has shape " + nn::shape_str(t.shape()) + ", expected " +
                         nn::shape_str(shape));
    }
}

}  // namespace

void check_bundle(const InputBundle& b, const ModelConfig& c) {
    expect_shape("left_eye", b.left_eye, {3, c.eye_h, c.eye_w});
    expect_shape("right_eye", b.right_eye, {3, c.eye_h, c.eye_w});
    expect_shape("face", b.face, {3, c.face_h, c.face_w});
    expect_shape("face_grid", b.face_grid, {c.grid_size * c.grid_size});
}

template <typename T>
BatchInput<T> stack(std::span<const InputBundle> bundles, const ModelConfig& c) {
    if (bundles.empty()) throw ShapeError("cannot stack an empty batch");
    const std::size_t n = bundles.size();
    BatchInput<T> out{nn::BasicTensor<T>({n, 3, c.eye_h, c.eye_w}), nn::BasicTensor<T>({n, 3, c.eye_h, c.eye_w}),
                      nn::BasicTensor<T>({n, 3, c.face_h, c.face_w}),
                      nn::BasicTensor<T>({n, c.grid_size * c.grid_size})};
    auto put = [](const nn::Tensor& src, nn::BasicTensor<T>& dst, std::size_t i) {
        std::copy(src.raw(), src.raw() + src.size(), dst.raw() + i * src.size());
    };
    for (std::size_t i = 0; i < n; ++i) {
        check_bundle(bundles[i], c);
        put(bundles[i].left_eye, out.left_eye, i);
        put(bundles[i].right_eye, out.right_eye, i);
        put(bundles[i].face, out.face, i);
        put(bundles[i].face_grid, out.face_grid, i);
    }
    return out;
}

template BatchInput<float> stack<float>(std::span<const InputBundle>, const ModelConfig&);
template BatchInput<double> stack<double>(std::span<const InputBundle>, const ModelConfig&);

}  // namespace eyetheia::model
