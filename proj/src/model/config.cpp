#include "eyetheia/model/config.hpp"

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace eyetheia::model {

std::string_view to_string(Profile profile) { return profile == Profile::Full ? "full" : "tiny"; }

Profile profile_from_string(std::string_view name) {
    if (name == "full") return Profile::Full;
    if (name == "tiny") return Profile::Tiny;
    throw std::invalid_argument("unknown profile '" + std::string(name) + "' (expected tiny|full)");
}

ModelConfig ModelConfig::full(Space output_space) {
    ModelConfig c;
    c.profile = Profile::Full;
    c.eye_h = c.eye_w = 112;
    c.face_h = c.face_w = 224;
    c.eye_convs = {
        {96, 11, 4, 0, true},
        {256, 5, 1, 2, true},
        {384, 3, 1, 1, false},
        {64, 1, 1, 0, false},
    };
    c.face_convs = c.eye_convs;
    c.face_convs.push_back({64, 3, 1, 1, false});
    c.output_space = output_space;
    return c;
}

ModelConfig ModelConfig::tiny(Space output_space) {
    ModelConfig c;
    c.profile = Profile::Tiny;
    c.eye_h = c.eye_w = 16;
    c.face_h = c.face_w = 32;
    c.eye_convs = {
        {8, 3, 1, 1, true},
        {8, 3, 1, 1, true},
        {16, 3, 1, 1, false},
        {8, 3, 1, 1, false},
    };
    c.face_convs = c.eye_convs;
    c.face_convs.push_back({8, 3, 1, 1, false});
    c.output_space = output_space;
    return c;
}

ModelConfig ModelConfig::for_profile(Profile profile, Space output_space) {
    return profile == Profile::Full ? full(output_space) : tiny(output_space);
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& why) { throw std::invalid_argument("inconsistent model config: " + why); };
    if (eye_convs.size() != 4) fail("eye branch needs exactly 4 conv layers");
    if (face_convs.size() != 5) fail("face branch needs exactly 5 conv layers");
    if (eye_fc != 128) fail("eye FC output must be 128");
    if (face_fc != std::vector<std::size_t>{128, 64}) fail("face FC chain must be 128 -> 64");
    if (grid_fc != std::vector<std::size_t>{256, 128}) fail("grid FC chain must be 256 -> 128");
    if (grid_size != 25) fail("face grid must be 25 x 25");
    if (fusion_hidden == 0) fail("fusion hidden width must be positive");
    if (output_space == Space::ScreenPx) fail("output space must be camera_cm or normalized_screen");
    if (profile == Profile::Full && (eye_h != 112 || eye_w != 112 || face_h != 224 || face_w != 224)) {
        fail("full profile uses 112x112 eyes and 224x224 face");
    }
    for (const auto* convs : {&eye_convs, &face_convs}) {
        for (const auto& l : *convs) {
            if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) fail("zero channels, kernel or stride");
        }
    }
}

std::string ModelConfig::fingerprint() const {
    std::ostringstream os;
    os << "v1|" << to_string(profile) << '|' << eye_h << 'x' << eye_w << '|' << face_h << 'x' << face_w << '|'
       << grid_size << '|';
    for (const auto* convs : {&eye_convs, &face_convs}) {
        for (const auto& l : *convs) {
            os << l.out_channels << ',' << l.kernel << ',' << l.stride << ',' << l.padding << ',' << l.pool_after
               << ';';
        }
        os << '|';
    }
    os << eye_fc << '|';
    for (auto f : face_fc) os << f << ',';
    os << '|';
    for (auto f : grid_fc) os << f << ',';
    os << '|' << fusion_hidden << '|' << eyetheia::to_string(output_space);

    // FNV-1a 64
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : os.str()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(to_string(profile)) + "-" + buf;
}

}  // namespace eyetheia::model
