#pragma once

#include <stdexcept>

#include "eyetheia/gaze_point.hpp"

// Conversions between camera-centimeter, normalized-screen and screen-pixel gaze spaces.
// Every conversion rejects a point tagged with the wrong space (SpaceMismatch) and clamps
// its result to the destination range.
namespace eyetheia::geometry {

class SpaceMismatch : public std::invalid_argument {
public:
    SpaceMismatch(Space expected, Space got);
};

// x_px = (25 + x_cm) / 50 * W,  y_px = (25 - y_cm) / 50 * H
GazePoint cm_to_px(const GazePoint& p, const ScreenGeometry& screen);
// x_cm = 50 x_px / W - 25,  y_cm = 25 - 50 y_px / H
GazePoint px_to_cm(const GazePoint& p, const ScreenGeometry& screen);

GazePoint norm_to_px(const GazePoint& p, const ScreenGeometry& screen);
GazePoint px_to_norm(const GazePoint& p, const ScreenGeometry& screen);

// Model-space point -> screen pixels, dispatching on the point's tag.
GazePoint to_px(const GazePoint& p, const ScreenGeometry& screen);
// Screen pixels -> the requested model space.
GazePoint from_px(const GazePoint& p, Space target, const ScreenGeometry& screen);

}  // namespace eyetheia::geometry
