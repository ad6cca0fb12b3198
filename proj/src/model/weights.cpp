#include "eyetheia/model/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"

namespace eyetheia::model {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'E', 'Y', 'T', 'H'};
constexpr std::size_t kAlign = 16;

std::size_t align_up(std::size_t n) { return (n + kAlign - 1) / kAlign * kAlign; }

struct ParsedHeader {
    nlohmann::json header;
    std::size_t blob_start = 0;
};

ParsedHeader parse_header(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw DataError("tensor container: bad magic (expected \"EYTH\")");
    }
    std::uint16_t version;
    std::uint32_t header_len;
    std::memcpy(&version, bytes.data() + 4, 2);
    std::memcpy(&header_len, bytes.data() + 6, 4);
    if (version != kContainerVersion) {
        throw DataError("tensor container: unsupported version " + std::to_string(version));
    }
    if (10 + static_cast<std::size_t>(header_len) > bytes.size()) throw DataError("tensor container: truncated header");
    ParsedHeader out;
    try {
        out.header = nlohmann::json::parse(bytes.begin() + 10, bytes.begin() + 10 + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("tensor container: malformed header: ") + e.what());
    }
    out.blob_start = align_up(10 + header_len);
    return out;
}

}  // namespace

const nn::Tensor* TensorContainer::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

std::vector<std::uint8_t> encode_container(const TensorContainer& container) {
    nlohmann::json entries = nlohmann::json::array();
    std::size_t offset = 0;
    std::set<std::string> seen;
    for (const auto& [name, t] : container.tensors) {
        if (!seen.insert(name).second) throw DataError("tensor container: duplicate tensor '" + name + "'");
        entries.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset = align_up(offset + t.size() * sizeof(float));
    }
    const nlohmann::json header = {
        {"fingerprint", container.fingerprint}, {"profile", container.profile}, {"tensors", entries}};
    const std::string text = header.dump();

    const auto header_len = static_cast<std::uint32_t>(text.size());
    const std::size_t blob_start = align_up(10 + text.size());
    std::vector<std::uint8_t> out(blob_start + offset, 0);
    std::memcpy(out.data(), kMagic, 4);
    std::memcpy(out.data() + 4, &kContainerVersion, 2);
    std::memcpy(out.data() + 6, &header_len, 4);
    std::memcpy(out.data() + 10, text.data(), text.size());
    std::size_t i = 0;
    for (const auto& [name, t] : container.tensors) {
        const std::size_t off = entries[i++]["offset"].get<std::size_t>();
        std::memcpy(out.data() + blob_start + off, t.raw(), t.size() * sizeof(float));
    }
    return out;
}

TensorContainer peek_container(const std::vector<std::uint8_t>& bytes) {
    const auto parsed = parse_header(bytes);
    TensorContainer c;
    try {
        c.fingerprint = parsed.header.at("fingerprint").get<std::string>();
        c.profile = parsed.header.value("profile", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("tensor container: malformed header: ") + e.what());
    }
    return c;
}

ModelConfig resolve_config(const std::vector<std::uint8_t>& bytes, Profile profile) {
    const auto header = peek_container(bytes);
    for (Space space : {Space::NormalizedScreen, Space::CameraCm}) {
        auto config = ModelConfig::for_profile(profile, space);
        if (config.fingerprint() == header.fingerprint) return config;
    }
    throw DataError("weights fingerprint " + header.fingerprint + " does not match the " +
                    std::string(to_string(profile)) + " profile");
}

TensorContainer decode_container(const std::vector<std::uint8_t>& bytes) {
    const auto parsed = parse_header(bytes);
    TensorContainer c = peek_container(bytes);
    std::set<std::string> seen;
    try {
        for (const auto& e : parsed.header.at("tensors")) {
            const auto name = e.at("name").get<std::string>();
            const auto shape = e.at("shape").get<nn::Shape>();
            const auto offset = e.at("offset").get<std::size_t>();
            if (!seen.insert(name).second) throw DataError("tensor container: duplicate tensor '" + name + "'");
            if (offset % kAlign != 0) throw DataError("tensor container: misaligned tensor '" + name + "'");
            const std::size_t count = nn::shape_numel(shape);
            const std::size_t begin = parsed.blob_start + offset;
            if (begin + count * sizeof(float) > bytes.size()) {
                throw DataError("tensor container: truncated blob (tensor '" + name + "')");
            }
            std::vector<float> data(count);
            std::memcpy(data.data(), bytes.data() + begin, count * sizeof(float));
            c.tensors.emplace_back(name, nn::Tensor(shape, std::move(data)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("tensor container: malformed header: ") + e.what());
    } catch (const ShapeError& e) {
        throw DataError(std::string("tensor container: ") + e.what());
    }
    return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<std::uint8_t> save_weights(const GazeNet& model) {
    TensorContainer c;
    c.fingerprint = model.config().fingerprint();
    c.profile = std::string(to_string(model.config().profile));
    for (const auto& [name, p] : model.params().layers()) {
        c.tensors.emplace_back(name + ".weights", p.weights);
        c.tensors.emplace_back(name + ".bias", p.bias);
    }
    return encode_container(c);
}

GazeNet load_weights(const std::vector<std::uint8_t>& bytes, const ModelConfig& config) {
    const TensorContainer c = decode_container(bytes);
    if (c.fingerprint != config.fingerprint()) {
        throw DataError("weights fingerprint '" + c.fingerprint + "' does not match config '" + config.fingerprint() +
                        "'");
    }
    GazeNet staged(config, 0);
    std::set<std::string> expected;
    for (const auto& [name, _] : staged.params().layers()) {
        expected.insert(name + ".weights");
        expected.insert(name + ".bias");
    }
    for (const auto& [name, t] : c.tensors) {
        if (!expected.count(name)) throw DataError("weights contain unknown tensor '" + name + "'");
    }
    for (auto& [layer, p] : staged.params().layers()) {
        for (auto [suffix, dst] : {std::pair{".weights", &p.weights}, std::pair{".bias", &p.bias}}) {
            const std::string name = layer + suffix;
            const nn::Tensor* src = c.find(name);
            if (!src) throw DataError("weights missing tensor '" + name + "'");
            if (src->shape() != dst->shape()) {
                throw DataError("weights tensor '" + name + "' has shape " + nn::shape_str(src->shape()) +
                                ", expected " + nn::shape_str(dst->shape()));
            }
            *dst = *src;
        }
    }
    return staged;
}

void save_weights_file(const GazeNet& model, const std::filesystem::path& path) {
    write_file_bytes(path, save_weights(model));
}

GazeNet load_weights_file(const std::filesystem::path& path, const ModelConfig& config) {
    return load_weights(read_file_bytes(path), config);
}

}  // namespace eyetheia::model
