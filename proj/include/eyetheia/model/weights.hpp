#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eyetheia/model/gaze_net.hpp"
#include "eyetheia/nn/tensor.hpp"

// Tensor container file:
//   "EYTH" | u16 version (LE) | u32 header length (LE) | UTF-8 JSON header | zero pad to 16 |
//   blob of little-endian f32 tensors, each starting at a 16-byte aligned offset from the blob start.
// The JSON header holds {"fingerprint", "profile", "tensors": [{"name", "shape", "offset"}]}.
namespace eyetheia::model {

inline constexpr std::uint16_t kContainerVersion = 1;

struct TensorContainer {
    std::string fingerprint;
    std::string profile;  // informational, e.g. "tiny"; empty for non-model containers
    std::vector<std::pair<std::string, nn::Tensor>> tensors;

    const nn::Tensor* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_container(const TensorContainer& container);
// Throws DataError on bad magic/version, truncated blob, malformed header or duplicate names.
TensorContainer decode_container(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

// Model weights as "<layer>.weights" / "<layer>.bias" tensors.
std::vector<std::uint8_t> save_weights(const GazeNet& model);
// Validates fingerprint, names and shapes of every tensor before touching the new model.
GazeNet load_weights(const std::vector<std::uint8_t>& bytes, const ModelConfig& config);

void save_weights_file(const GazeNet& model, const std::filesystem::path& path);
GazeNet load_weights_file(const std::filesystem::path& path, const ModelConfig& config);

// Reads just the header fields (fingerprint, profile) of a container.
TensorContainer peek_container(const std::vector<std::uint8_t>& bytes);

// The profile's config whose fingerprint (which covers the output space) matches the container.
// Throws DataError when neither output space matches.
ModelConfig resolve_config(const std::vector<std::uint8_t>& bytes, Profile profile);

}  // namespace eyetheia::model
