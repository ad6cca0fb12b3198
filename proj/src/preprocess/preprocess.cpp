#include "eyetheia/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eyetheia/model/weights.hpp"

namespace eyetheia::preprocess {

void Frame::validate() const {
    if (width == 0 || height == 0) throw DataError("frame has zero size");
    if (rgb.shape() != nn::Shape{3, height, width}) {
        throw DataError("frame pixels have shape " + nn::shape_str(rgb.shape()) + ", expected " +
                        nn::shape_str({3, height, width}));
    }
    if (landmarks && landmarks->size() != kLandmarkCount) {
        throw DataError("expected " + std::to_string(kLandmarkCount) + " landmarks, got " +
                        std::to_string(landmarks->size()));
    }
}

IndexConfig IndexConfig::face_mesh_default() {
    IndexConfig c;
    c.left_eye = {263, 249, 390, 373, 374, 380, 381, 382, 362, 466, 388, 387, 386, 385, 384, 398};
    c.right_eye = {33, 7, 163, 144, 145, 153, 154, 155, 133, 246, 161, 160, 159, 158, 157, 173};
    c.face = {10,  338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288, 397, 365, 379, 378, 400, 377,
              152, 148, 176, 149, 150, 136, 172, 58,  132, 93,  234, 127, 162, 21,  54,  103, 67,  109};
    return c;
}

MeanImages MeanImages::constant(const model::ModelConfig& c, float value) {
    return {nn::Tensor({3, c.face_h, c.face_w}, value), nn::Tensor({3, c.eye_h, c.eye_w}, value),
            nn::Tensor({3, c.eye_h, c.eye_w}, value)};
}

void MeanImages::check(const model::ModelConfig& c) const {
    if (face.shape() != nn::Shape{3, c.face_h, c.face_w} || left_eye.shape() != nn::Shape{3, c.eye_h, c.eye_w} ||
        right_eye.shape() != nn::Shape{3, c.eye_h, c.eye_w}) {
        throw ShapeError("mean images do not match the " + std::string(model::to_string(c.profile)) +
                         " profile input sizes");
    }
}

MeanImages load_means(const std::filesystem::path& path, const model::ModelConfig& config) {
    const auto c = model::decode_container(model::read_file_bytes(path));
    MeanImages m;
    for (auto [name, dst] : {std::pair{"mean.face", &m.face}, std::pair{"mean.left_eye", &m.left_eye},
                             std::pair{"mean.right_eye", &m.right_eye}}) {
        const nn::Tensor* t = c.find(name);
        if (!t) throw DataError("mean image container lacks '" + std::string(name) + "'");
        *dst = *t;
    }
    m.check(config);
    return m;
}

void save_means(const MeanImages& means, const std::filesystem::path& path) {
    model::TensorContainer c;
    c.fingerprint = "mean-images";
    c.tensors = {{"mean.face", means.face}, {"mean.left_eye", means.left_eye}, {"mean.right_eye", means.right_eye}};
    model::write_file_bytes(path, model::encode_container(c));
}

namespace {

BBox hull_box(const Frame& frame, const std::vector<int>& indices, double padding, const char* region) {
    const auto& lm = *frame.landmarks;
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    for (int i : indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= lm.size()) {
            throw DataError(std::string(region) + " landmark index " + std::to_string(i) + " out of range");
        }
        const double x = static_cast<double>(lm[i].x) * static_cast<double>(frame.width);
        const double y = static_cast<double>(lm[i].y) * static_cast<double>(frame.height);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    if (indices.empty() || !(x1 > x0) || !(y1 > y0)) {
        throw DataError(std::string("degenerate ") + region + " landmark hull (zero area)");
    }
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const double hw = 0.5 * (x1 - x0) * (1.0 + 2.0 * padding);
    const double hh = 0.5 * (y1 - y0) * (1.0 + 2.0 * padding);
    BBox b{std::clamp(cx - hw, 0.0, double(frame.width)), std::clamp(cy - hh, 0.0, double(frame.height)),
           std::clamp(cx + hw, 0.0, double(frame.width)), std::clamp(cy + hh, 0.0, double(frame.height))};
    if (!(b.width() > 0 && b.height() > 0)) {
        throw DataError(std::string(region) + " box lies outside the frame");
    }
    return b;
}

}  // namespace

FaceBoxes extract_bboxes(const Frame& frame, const IndexConfig& config) {
    if (!frame.landmarks) throw NoFaceError();
    frame.validate();
    return {hull_box(frame, config.left_eye, config.eye_padding, "left-eye"),
            hull_box(frame, config.right_eye, config.eye_padding, "right-eye"),
            hull_box(frame, config.face, config.face_padding, "face")};
}

nn::Tensor crop_resize(const Frame& frame, const BBox& bbox, std::size_t target_h, std::size_t target_w) {
    if (!(bbox.width() > 0 && bbox.height() > 0)) throw DataError("crop box has zero area");
    if (target_h == 0 || target_w == 0) throw ShapeError("crop target size must be positive");
    const std::size_t W = frame.width, H = frame.height;
    nn::Tensor out({3, target_h, target_w});
    const double sx = bbox.width() / double(target_w), sy = bbox.height() / double(target_h);

    struct Tap {
        std::size_t lo, hi;
        float w_hi;
    };
    auto taps = [](double src, std::size_t limit) {
        src = std::clamp(src, 0.0, double(limit - 1));
        const auto lo = static_cast<std::size_t>(std::floor(src));
        const std::size_t hi = std::min(lo + 1, limit - 1);
        return Tap{lo, hi, static_cast<float>(src - double(lo))};
    };
    std::vector<Tap> xs(target_w), ys(target_h);
    for (std::size_t j = 0; j < target_w; ++j) xs[j] = taps(bbox.x0 + (double(j) + 0.5) * sx - 0.5, W);
    for (std::size_t i = 0; i < target_h; ++i) ys[i] = taps(bbox.y0 + (double(i) + 0.5) * sy - 0.5, H);

    for (std::size_t c = 0; c < 3; ++c) {
        const float* plane = frame.rgb.raw() + c * H * W;
        float* dst = out.raw() + c * target_h * target_w;
        for (std::size_t i = 0; i < target_h; ++i) {
            const Tap& ty = ys[i];
            for (std::size_t j = 0; j < target_w; ++j) {
                const Tap& tx = xs[j];
                const float top = plane[ty.lo * W + tx.lo] * (1 - tx.w_hi) + plane[ty.lo * W + tx.hi] * tx.w_hi;
                const float bottom = plane[ty.hi * W + tx.lo] * (1 - tx.w_hi) + plane[ty.hi * W + tx.hi] * tx.w_hi;
                dst[i * target_w + j] = top * (1 - ty.w_hi) + bottom * ty.w_hi;
            }
        }
    }
    return out;
}

nn::Tensor normalize_and_center(const nn::Tensor& crop, const nn::Tensor& mean) {
    if (crop.shape() != mean.shape()) {
        throw ShapeError("crop shape " + nn::shape_str(crop.shape()) + " differs from mean shape " +
                         nn::shape_str(mean.shape()));
    }
    nn::Tensor out(crop.shape());
    for (std::size_t i = 0; i < crop.size(); ++i) out[i] = crop[i] / 255.0f - mean[i];
    return out;
}

nn::Tensor face_grid(const BBox& face, std::size_t frame_w, std::size_t frame_h, std::size_t n) {
    nn::Tensor grid({n * n});
    const double cw = double(frame_w) / double(n), ch = double(frame_h) / double(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double cy = (double(i) + 0.5) * ch;
        if (cy < face.y0 || cy >= face.y1) continue;
        for (std::size_t j = 0; j < n; ++j) {
            const double cx = (double(j) + 0.5) * cw;
            if (cx >= face.x0 && cx < face.x1) {
                grid[i * n + j] = 1.0f;
                any = true;
            }
        }
    }
    if (!any) {
        const auto col = std::min(n - 1, static_cast<std::size_t>(std::max(0.0, 0.5 * (face.x0 + face.x1) / cw)));
        const auto row = std::min(n - 1, static_cast<std::size_t>(std::max(0.0, 0.5 * (face.y0 + face.y1) / ch)));
        grid[row * n + col] = 1.0f;
    }
    return grid;
}

model::InputBundle make_bundle(const Frame& frame, const MeanImages& means, const model::ModelConfig& config,
                               const IndexConfig& index_config) {
    means.check(config);
    const FaceBoxes boxes = extract_bboxes(frame, index_config);
    model::InputBundle b;
    b.left_eye = normalize_and_center(crop_resize(frame, boxes.left_eye, config.eye_h, config.eye_w), means.left_eye);
    b.right_eye =
        normalize_and_center(crop_resize(frame, boxes.right_eye, config.eye_h, config.eye_w), means.right_eye);
    b.face = normalize_and_center(crop_resize(frame, boxes.face, config.face_h, config.face_w), means.face);
    b.face_grid = face_grid(boxes.face, frame.width, frame.height, config.grid_size);
    return b;
}

std::vector<Landmark> landmarks_from_flat(const std::vector<float>& flat) {
    if (flat.size() != 2 * kLandmarkCount) {
        throw DataError("landmarks must be a flat array of " + std::to_string(2 * kLandmarkCount) + " floats, got " +
                        std::to_string(flat.size()));
    }
    std::vector<Landmark> out(kLandmarkCount);
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        if (!std::isfinite(flat[2 * i]) || !std::isfinite(flat[2 * i + 1])) {
            throw DataError("landmark " + std::to_string(i) + " is not finite");
        }
        out[i] = {flat[2 * i], flat[2 * i + 1]};
    }
    return out;
}

std::vector<float> landmarks_to_flat(const std::vector<Landmark>& landmarks) {
    std::vector<float> flat;
    flat.reserve(2 * landmarks.size());
    for (const auto& l : landmarks) {
        flat.push_back(l.x);
        flat.push_back(l.y);
    }
    return flat;
}

}  // namespace eyetheia::preprocess
