#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "eyetheia/model/bundle.hpp"
#include "eyetheia/model/config.hpp"
#include "eyetheia/nn/tensor.hpp"

// Frame + face-mesh landmarks -> InputBundle: landmark boxes, bilinear crops,
// [0,1] scaling with branch mean subtraction, and the 25x25 face grid.
namespace eyetheia::preprocess {

inline constexpr std::size_t kLandmarkCount = 478;

struct Landmark {
    float x = 0;  // normalized to frame width, may overshoot [0, 1] slightly
    float y = 0;
};

struct Frame {
    std::size_t width = 0;
    std::size_t height = 0;
    nn::Tensor rgb;  // 3 x height x width, 0..255
    std::optional<std::vector<Landmark>> landmarks;

    // Throws DataError unless landmarks (if any) number exactly 478 and rgb matches the size.
    void validate() const;
};

// Pixel-space rectangle [x0, x1) x [y0, y1).
struct BBox {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

struct FaceBoxes {
    BBox left_eye, right_eye, face;
};

// Landmark index sets and padding fractions. Defaults are the canonical 478-point face-mesh
// eye contours and face oval. Boxes are scaled by (1 + 2 * padding) about the hull center.
struct IndexConfig {
    std::vector<int> left_eye;
    std::vector<int> right_eye;
    std::vector<int> face;
    double eye_padding = 0.25;
    double face_padding = 0.10;

    static IndexConfig face_mesh_default();
};

struct MeanImages {
    nn::Tensor face;       // 3 x face_h x face_w, values in [0, 1]
    nn::Tensor left_eye;   // 3 x eye_h x eye_w
    nn::Tensor right_eye;

    static MeanImages constant(const model::ModelConfig& config, float value = 0.5f);
    void check(const model::ModelConfig& config) const;
};

// Mean images live in the weights container format under "mean.face", "mean.left_eye", "mean.right_eye".
MeanImages load_means(const std::filesystem::path& path, const model::ModelConfig& config);
void save_means(const MeanImages& means, const std::filesystem::path& path);

// Throws NoFaceError without landmarks and DataError for a zero-area hull or box.
FaceBoxes extract_bboxes(const Frame& frame, const IndexConfig& config = IndexConfig::face_mesh_default());

// Bilinear resample of the bbox region to 3 x target_h x target_w (half-pixel centers, edge clamp).
nn::Tensor crop_resize(const Frame& frame, const BBox& bbox, std::size_t target_h, std::size_t target_w);

// crop / 255 - mean
nn::Tensor normalize_and_center(const nn::Tensor& crop, const nn::Tensor& mean);

// Cell (i, j) is 1 iff its center ((j + 0.5) W / n, (i + 0.5) H / n) lies in the bbox.
// A box that covers no cell center marks the cell containing the box center.
nn::Tensor face_grid(const BBox& face, std::size_t frame_w, std::size_t frame_h, std::size_t grid_size = 25);

model::InputBundle make_bundle(const Frame& frame, const MeanImages& means, const model::ModelConfig& config,
                               const IndexConfig& index_config = IndexConfig::face_mesh_default());

// Flat [x0, y0, x1, y1, ...] array of 956 floats -> landmarks.
std::vector<Landmark> landmarks_from_flat(const std::vector<float>& flat);
std::vector<float> landmarks_to_flat(const std::vector<Landmark>& landmarks);

}  // namespace eyetheia::preprocess
