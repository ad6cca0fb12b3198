#pragma once

#include <cstdint>
#include <optional>

#include "eyetheia/gaze_point.hpp"

namespace eyetheia::smoothing {

struct OneEuroConfig {
    double min_cutoff = 1.0;  // Hz, > 0
    double beta = 0.007;      // speed coefficient, >= 0
    double d_cutoff = 1.0;    // Hz, > 0
    bool enabled = true;

    // Throws std::invalid_argument when a parameter is out of range.
    void validate() const;
};

// Smoothing factor of a first-order low-pass at `cutoff_hz` sampled every `period_s`.
double one_euro_alpha(double cutoff_hz, double period_s);

// Adaptive low-pass over a 2D stream: the derivative is smoothed at d_cutoff, the position at
// min_cutoff + beta * |derivative|.
class OneEuroFilter {
public:
    explicit OneEuroFilter(OneEuroConfig config = {});

    // Returns the smoothed point in the input's space, or nullopt (state untouched) when t_ms does not
    // strictly exceed the previous accepted timestamp. The first sample passes through unchanged.
    // A disabled filter returns its input. Throws std::invalid_argument if the space changes mid-stream.
    std::optional<GazePoint> filter(double t_ms, const GazePoint& p);

    void reset();
    bool primed() const { return last_t_ms_.has_value(); }
    const OneEuroConfig& config() const { return config_; }

private:
    struct Axis {
        double value = 0;
        double derivative = 0;
    };

    OneEuroConfig config_;
    Axis x_, y_;
    Space space_ = Space::ScreenPx;
    std::optional<double> last_t_ms_;
};

}  // namespace eyetheia::smoothing
