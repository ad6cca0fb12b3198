#include "eyetheia/calibration.hpp"

#include <chrono>
#include <cmath>

#include "eyetheia/errors.hpp"
#include "eyetheia/geometry.hpp"
#include "eyetheia/training.hpp"

namespace eyetheia::calibration {

std::vector<std::pair<double, double>> default_targets(const ScreenGeometry& screen) {
    std::vector<std::pair<double, double>> out;
    for (double fy : {0.1, 0.5, 0.9})
        for (double fx : {0.1, 0.5, 0.9}) out.emplace_back(fx * screen.width_px, fy * screen.height_px);
    for (double fy : {0.3, 0.7})
        for (double fx : {0.3, 0.7}) out.emplace_back(fx * screen.width_px, fy * screen.height_px);
    return out;
}

std::vector<CalibrationSample> assemble(std::span<const RawSample> samples, const ScreenGeometry& screen,
                                        const preprocess::MeanImages& means, const model::ModelConfig& config) {
    if (samples.size() < kMinSamples) {
        throw std::invalid_argument("calibration needs at least " + std::to_string(kMinSamples) + " samples, got " +
                                    std::to_string(samples.size()));
    }
    std::vector<CalibrationSample> out;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const GazePoint px{s.x_px, s.y_px, Space::ScreenPx, std::nullopt, true};
        if (!in_space_range(px, screen)) {
            throw std::invalid_argument("calibration target " + std::to_string(i) + " lies outside the screen");
        }
        CalibrationSample c;
        c.target_x_px = s.x_px;
        c.target_y_px = s.y_px;
        const auto t = geometry::from_px(px, config.output_space, screen);
        c.target_x = t.x;
        c.target_y = t.y;
        try {
            c.bundle = preprocess::make_bundle(s.frame, means, config);
            c.valid = true;
        } catch (const NoFaceError&) {
            ++invalid;
        }
        out.push_back(std::move(c));
    }
    if (2 * invalid > samples.size()) {
        throw CalibrationAborted("calibration aborted: " + std::to_string(invalid) + " of " +
                                 std::to_string(samples.size()) + " frames have no face");
    }
    return out;
}

namespace {

std::vector<train::Example> valid_examples(std::span<const CalibrationSample> samples, const ScreenGeometry& screen) {
    std::vector<train::Example> ex;
    for (const auto& s : samples) {
        if (!s.valid || !s.bundle) continue;
        ex.push_back({*s.bundle, s.target_x, s.target_y, screen, ""});
    }
    return ex;
}

std::vector<GazePoint> predictions_px(const model::GazeNet& model, std::span<const CalibrationSample> samples,
                                      const ScreenGeometry& screen) {
    std::vector<GazePoint> out;
    for (const auto& s : samples) {
        if (s.valid && s.bundle) out.push_back(geometry::to_px(model.predict(*s.bundle), screen));
    }
    return out;
}

}  // namespace

double mean_error_px(const model::GazeNet& model, std::span<const CalibrationSample> samples,
                     const ScreenGeometry& screen) {
    const auto pred = predictions_px(model, samples, screen);
    if (pred.empty()) throw DataError("no valid calibration samples");
    double sum = 0;
    std::size_t k = 0;
    for (const auto& s : samples) {
        if (!s.valid || !s.bundle) continue;
        sum += std::hypot(pred[k].x - s.target_x_px, pred[k].y - s.target_y_px);
        ++k;
    }
    return sum / double(k);
}

CalibrationReport fine_tune(model::GazeNet& model, std::span<const CalibrationSample> samples,
                            const ScreenGeometry& screen, const FineTuneConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto examples = valid_examples(samples, screen);
    if (examples.empty()) throw CalibrationAborted("calibration aborted: no valid samples");

    const auto before = predictions_px(model, samples, screen);
    model::GazeNet work = model;
    train::TrainConfig tc;
    tc.loss = {nn::LossKind::EuclideanMSE, 1.0};
    tc.adam.lr = config.lr;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size == 0 ? examples.size() : config.batch_size;
    std::vector<train::EpochStats> history;
    try {
        history = train::fit(work, examples, {}, tc);
        for (const auto& [name, p] : work.params().layers()) {
            if (!p.weights.all_finite() || !p.bias.all_finite()) throw NumericError("non-finite weights in " + name);
        }
    } catch (const NumericError& e) {
        throw CalibrationAborted(std::string("calibration aborted, weights restored: ") + e.what());
    }
    const auto after = predictions_px(work, samples, screen);

    CalibrationReport rep;
    rep.n_samples = examples.size();
    std::size_t k = 0;
    for (const auto& s : samples) {
        if (!s.valid || !s.bundle) continue;
        Residual r{s.target_x_px, s.target_y_px, before[k].x, before[k].y, after[k].x, after[k].y, 0, 0};
        r.error_before_px = std::hypot(r.before_x_px - r.target_x_px, r.before_y_px - r.target_y_px);
        r.error_after_px = std::hypot(r.after_x_px - r.target_x_px, r.after_y_px - r.target_y_px);
        rep.mean_error_before_px += r.error_before_px;
        rep.mean_error_after_px += r.error_after_px;
        rep.residuals.push_back(r);
        ++k;
    }
    rep.mean_error_before_px /= double(k);
    rep.mean_error_after_px /= double(k);
    rep.steps = config.epochs * ((examples.size() + tc.batch_size - 1) / tc.batch_size);
    for (const auto& h : history) rep.loss_per_epoch.push_back(h.train_loss);
    model = std::move(work);
    rep.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace eyetheia::calibration
