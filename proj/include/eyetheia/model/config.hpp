#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "eyetheia/gaze_point.hpp"

namespace eyetheia::model {

enum class Profile { Full, Tiny };

std::string_view to_string(Profile profile);
Profile profile_from_string(std::string_view name);

struct ConvLayerConfig {
    std::size_t out_channels = 0;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 0;
    bool pool_after = false;  // 2x2 / stride 2 max-pool follows
};

struct ModelConfig {
    Profile profile = Profile::Tiny;
    std::size_t eye_h = 16, eye_w = 16;
    std::size_t face_h = 32, face_w = 32;
    std::size_t grid_size = 25;
    std::vector<ConvLayerConfig> eye_convs;   // shared by both eyes
    std::vector<ConvLayerConfig> face_convs;
    std::size_t eye_fc = 128;                 // applied to the concatenated eye pair
    std::vector<std::size_t> face_fc{128, 64};
    std::vector<std::size_t> grid_fc{256, 128};
    std::size_t fusion_hidden = 128;
    Space output_space = Space::CameraCm;

    static ModelConfig full(Space output_space = Space::CameraCm);
    static ModelConfig tiny(Space output_space = Space::CameraCm);
    static ModelConfig for_profile(Profile profile, Space output_space);

    // Throws std::invalid_argument when the layer table breaks the three-branch layout.
    void validate() const;

    // Stable identifier of everything that determines tensor names and shapes.
    std::string fingerprint() const;
};

}  // namespace eyetheia::model
