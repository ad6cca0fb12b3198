#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "eyetheia/nn/tensor.hpp"

namespace eyetheia::io {

// 3 x H x W, channel order R, G, B, values 0..255.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    nn::Tensor rgb;
};

// PNG or JPEG bytes. Throws DataError on anything undecodable.
RgbImage decode_image(const std::vector<std::uint8_t>& bytes);
RgbImage read_image(const std::filesystem::path& path);

// Values are rounded and clamped to 0..255.
std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality = 95);
void write_png(const RgbImage& image, const std::filesystem::path& path);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
// Accepts padded or unpadded input and an optional "data:...;base64," prefix.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace eyetheia::io
