#include "eyetheia/geometry.hpp"

#include <string>

namespace eyetheia::geometry {

namespace {

constexpr double kSpan = 2 * kCameraCmHalfSpan;

void expect(const GazePoint& p, Space space) {
    if (p.space != space) throw SpaceMismatch(space, p.space);
}

GazePoint retag(const GazePoint& p, double x, double y, Space space) {
    GazePoint out = p;
    out.x = x;
    out.y = y;
    out.space = space;
    return out;
}

}  // namespace

SpaceMismatch::SpaceMismatch(Space expected, Space got)
    : std::invalid_argument("expected a " + std::string(to_string(expected)) + " point, got " +
                            std::string(to_string(got))) {}

GazePoint cm_to_px(const GazePoint& p, const ScreenGeometry& screen) {
    expect(p, Space::CameraCm);
    const double x = (kCameraCmHalfSpan + p.x) / kSpan * screen.width_px;
    const double y = (kCameraCmHalfSpan - p.y) / kSpan * screen.height_px;
    return clamp_to_space(retag(p, x, y, Space::ScreenPx), screen);
}

GazePoint px_to_cm(const GazePoint& p, const ScreenGeometry& screen) {
    expect(p, Space::ScreenPx);
    const double x = kSpan * p.x / screen.width_px - kCameraCmHalfSpan;
    const double y = kCameraCmHalfSpan - kSpan * p.y / screen.height_px;
    return clamp_to_space(retag(p, x, y, Space::CameraCm));
}

GazePoint norm_to_px(const GazePoint& p, const ScreenGeometry& screen) {
    expect(p, Space::NormalizedScreen);
    return clamp_to_space(retag(p, p.x * screen.width_px, p.y * screen.height_px, Space::ScreenPx), screen);
}

GazePoint px_to_norm(const GazePoint& p, const ScreenGeometry& screen) {
    expect(p, Space::ScreenPx);
    return clamp_to_space(retag(p, p.x / screen.width_px, p.y / screen.height_px, Space::NormalizedScreen));
}

GazePoint to_px(const GazePoint& p, const ScreenGeometry& screen) {
    switch (p.space) {
        case Space::CameraCm: return cm_to_px(p, screen);
        case Space::NormalizedScreen: return norm_to_px(p, screen);
        case Space::ScreenPx: return clamp_to_space(p, screen);
    }
    throw std::invalid_argument("unknown space");
}

GazePoint from_px(const GazePoint& p, Space target, const ScreenGeometry& screen) {
    switch (target) {
        case Space::CameraCm: return px_to_cm(p, screen);
        case Space::NormalizedScreen: return px_to_norm(p, screen);
        case Space::ScreenPx:
            expect(p, Space::ScreenPx);
            return clamp_to_space(p, screen);
    }
    throw std::invalid_argument("unknown space");
}

}  // namespace eyetheia::geometry
