#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace eyetheia {

enum class Space { CameraCm, NormalizedScreen, ScreenPx };

std::string_view to_string(Space space);
Space space_from_string(std::string_view name);

struct ScreenGeometry {
    double width_px = 0;
    double height_px = 0;

    // Throws std::invalid_argument unless both dimensions are positive and finite.
    static ScreenGeometry make(double width_px, double height_px);
    double diagonal() const;

    friend bool operator==(const ScreenGeometry&, const ScreenGeometry&) = default;
};

// A 2D gaze estimate tagged with the coordinate space it lives in.
struct GazePoint {
    double x = 0;
    double y = 0;
    Space space = Space::ScreenPx;
    std::optional<std::int64_t> timestamp_ms;
    bool valid = true;

    friend bool operator==(const GazePoint&, const GazePoint&) = default;
};

constexpr double kCameraCmHalfSpan = 25.0;

// Clamps into the space's range: [-25, 25]^2 cm, [0, 1]^2 normalized, [0, W] x [0, H] px.
// ScreenPx requires a screen.
GazePoint clamp_to_space(GazePoint p, const std::optional<ScreenGeometry>& screen = std::nullopt);

bool in_space_range(const GazePoint& p, const std::optional<ScreenGeometry>& screen = std::nullopt);

}  // namespace eyetheia
