#include "eyetheia/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "eyetheia/errors.hpp"
#include "eyetheia/model/weights.hpp"

namespace eyetheia::io {

namespace {

cv::Mat to_bgr(const RgbImage& image) {
    if (image.rgb.shape() != nn::Shape{3, image.height, image.width}) {
        throw ShapeError("image tensor has shape " + nn::shape_str(image.rgb.shape()));
    }
    const std::size_t plane = image.width * image.height;
    cv::Mat m(static_cast<int>(image.height), static_cast<int>(image.width), CV_8UC3);
    for (std::size_t y = 0; y < image.height; ++y) {
        auto* row = m.ptr<std::uint8_t>(static_cast<int>(y));
        for (std::size_t x = 0; x < image.width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const float v = image.rgb[c * plane + y * image.width + x];
                row[3 * x + (2 - c)] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return m;
}

std::vector<std::uint8_t> encode(const RgbImage& image, const char* ext, const std::vector<int>& params) {
    std::vector<std::uint8_t> out;
    if (!cv::imencode(ext, to_bgr(image), out, params)) throw DataError(std::string("failed to encode ") + ext);
    return out;
}

}  // namespace

RgbImage decode_image(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) throw DataError("empty image payload");
    cv::Mat m;
    try {
        m = cv::imdecode(bytes, cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw DataError(std::string("image decode failed: ") + e.what());
    }
    if (m.empty()) throw DataError("image payload is not a decodable PNG or JPEG");
    RgbImage img;
    img.width = static_cast<std::size_t>(m.cols);
    img.height = static_cast<std::size_t>(m.rows);
    img.rgb = nn::Tensor({3, img.height, img.width});
    const std::size_t plane = img.width * img.height;
    for (std::size_t y = 0; y < img.height; ++y) {
        const auto* row = m.ptr<std::uint8_t>(static_cast<int>(y));
        for (std::size_t x = 0; x < img.width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) img.rgb[c * plane + y * img.width + x] = row[3 * x + (2 - c)];
        }
    }
    return img;
}

RgbImage read_image(const std::filesystem::path& path) {
    try {
        return decode_image(model::read_file_bytes(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) { return encode(image, ".png", {}); }

std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality) {
    return encode(image, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
    model::write_file_bytes(path, encode_png(image));
}

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        for (int s = 18; s >= 0; s -= 6) out.push_back(kAlphabet[(v >> s) & 63]);
    }
    if (const std::size_t rest = bytes.size() - i; rest > 0) {
        std::uint32_t v = bytes[i] << 16;
        if (rest == 2) v |= bytes[i + 1] << 8;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.rfind("data:", 0) == 0) {
        const auto comma = text.find(',');
        if (comma == std::string_view::npos) throw DataError("malformed data URL");
        text.remove_prefix(comma + 1);
    }
    std::array<int, 256> lut;
    lut.fill(-1);
    for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kAlphabet[i])] = i;
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    std::uint32_t acc = 0;
    int bits = 0;
    std::size_t pad = 0;
    for (char ch : text) {
        if (ch == '=') {
            ++pad;
            continue;
        }
        if (ch == '\n' || ch == '\r' || ch == ' ') continue;
        const int v = lut[static_cast<unsigned char>(ch)];
        if (v < 0 || pad > 0) throw DataError("invalid base64 payload");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    if (pad > 2 || bits >= 6) throw DataError("invalid base64 length");
    return out;
}

}  // namespace eyetheia::io
