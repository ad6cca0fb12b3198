#include "eyetheia/gaze_point.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eyetheia {

std::string_view to_string(Space space) {
    switch (space) {
        case Space::CameraCm: return "camera_cm";
        case Space::NormalizedScreen: return "normalized_screen";
        case Space::ScreenPx: return "screen_px";
    }
    return "unknown";
}

Space space_from_string(std::string_view name) {
    if (name == "camera_cm") return Space::CameraCm;
    if (name == "normalized_screen") return Space::NormalizedScreen;
    if (name == "screen_px") return Space::ScreenPx;
    throw std::invalid_argument("unknown gaze space '" + std::string(name) + "'");
}

ScreenGeometry ScreenGeometry::make(double width_px, double height_px) {
    if (!(std::isfinite(width_px) && std::isfinite(height_px) && width_px > 0 && height_px > 0)) {
        throw std::invalid_argument("screen dimensions must be positive, got " + std::to_string(width_px) + "x" +
                                    std::to_string(height_px));
    }
    return {width_px, height_px};
}

double ScreenGeometry::diagonal() const { return std::hypot(width_px, height_px); }

GazePoint clamp_to_space(GazePoint p, const std::optional<ScreenGeometry>& screen) {
    switch (p.space) {
        case Space::CameraCm:
            p.x = std::clamp(p.x, -kCameraCmHalfSpan, kCameraCmHalfSpan);
            p.y = std::clamp(p.y, -kCameraCmHalfSpan, kCameraCmHalfSpan);
            break;
        case Space::NormalizedScreen:
            p.x = std::clamp(p.x, 0.0, 1.0);
            p.y = std::clamp(p.y, 0.0, 1.0);
            break;
        case Space::ScreenPx:
            if (!screen) throw std::invalid_argument("clamping a screen_px point needs the screen geometry");
            p.x = std::clamp(p.x, 0.0, screen->width_px);
            p.y = std::clamp(p.y, 0.0, screen->height_px);
            break;
    }
    return p;
}

bool in_space_range(const GazePoint& p, const std::optional<ScreenGeometry>& screen) {
    return clamp_to_space(p, screen) == p;
}

}  // namespace eyetheia
