#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "eyetheia/gaze_point.hpp"
#include "eyetheia/model/gaze_net.hpp"
#include "eyetheia/preprocess.hpp"

// User calibration: frames captured while fixating known targets fine-tune a private model copy.
namespace eyetheia::calibration {

// Calibration could not run; any model passed in is left exactly as it was.
class CalibrationAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RawSample {
    preprocess::Frame frame;
    double x_px = 0;
    double y_px = 0;
};

struct CalibrationSample {
    double target_x_px = 0;
    double target_y_px = 0;
    bool valid = false;                   // false when no face was found
    std::optional<model::InputBundle> bundle;
    double target_x = 0;                  // target in the model's output space
    double target_y = 0;
};

// 3x3 grid at 10/50/90 % of each dimension, then the four points at 30/70 %.
std::vector<std::pair<double, double>> default_targets(const ScreenGeometry& screen);

inline constexpr std::size_t kMinSamples = 4;

// Throws std::invalid_argument for fewer than kMinSamples samples or off-screen targets, and
// CalibrationAborted when more than half of the frames have no face.
std::vector<CalibrationSample> assemble(std::span<const RawSample> samples, const ScreenGeometry& screen,
                                        const preprocess::MeanImages& means, const model::ModelConfig& config);

struct FineTuneConfig {
    double lr = 1e-4;
    std::size_t epochs = 100;
    std::size_t batch_size = 0;  // 0: full batch
};

struct Residual {
    double target_x_px = 0, target_y_px = 0;
    double before_x_px = 0, before_y_px = 0;
    double after_x_px = 0, after_y_px = 0;
    double error_before_px = 0, error_after_px = 0;
};

struct CalibrationReport {
    std::size_t n_samples = 0;  // valid samples used
    double mean_error_before_px = 0;
    double mean_error_after_px = 0;
    std::vector<Residual> residuals;
    std::size_t steps = 0;
    double wall_time_ms = 0;
    std::vector<double> loss_per_epoch;
};

// Fine-tunes a copy of `model` on the valid samples with Adam and a Euclidean loss, then swaps it in.
// On a non-finite loss or gradient it throws CalibrationAborted and `model` is untouched.
CalibrationReport fine_tune(model::GazeNet& model, std::span<const CalibrationSample> samples,
                            const ScreenGeometry& screen, const FineTuneConfig& config = {});

// Mean pixel distance between the model's clamped predictions and the valid samples' targets.
double mean_error_px(const model::GazeNet& model, std::span<const CalibrationSample> samples,
                     const ScreenGeometry& screen);

}  // namespace eyetheia::calibration
