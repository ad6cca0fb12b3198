#pragma once

#include "eyetheia/calibration.hpp"
#include "eyetheia/geometry.hpp"
#include "eyetheia/nn/params.hpp"
#include "eyetheia/synthetic.hpp"
#include "eyetheia/training.hpp"

namespace testutil {

// In-memory synthetic subjects rendered at random targets.
inline std::vector<eyetheia::train::Example> synthetic_examples(const eyetheia::model::ModelConfig& cfg,
                                                                 std::size_t subjects, std::size_t per_subject,
                                                                 std::uint64_t seed) {
    using namespace eyetheia;
    const auto means = preprocess::MeanImages::constant(cfg);
    const ScreenGeometry screen{1920, 1080};
    std::uint64_t state = seed;
    std::vector<train::Example> out;
    for (std::size_t s = 0; s < subjects; ++s) {
        const auto subject = synthetic::random_subject(state);
        for (std::size_t i = 0; i < per_subject; ++i) {
            const double u = nn::unit_uniform(state), v = nn::unit_uniform(state);
            const auto frame = synthetic::render(subject, u, v, seed * 7919 + s * 1000 + i);
            train::Example ex;
            ex.bundle = preprocess::make_bundle(frame, means, cfg);
            const auto t = geometry::from_px({u * screen.width_px, v * screen.height_px, Space::ScreenPx,
                                              std::nullopt, true},
                                             cfg.output_space, screen);
            ex.target_x = t.x;
            ex.target_y = t.y;
            ex.screen = screen;
            out.push_back(std::move(ex));
        }
    }
    return out;
}

// Tiny NormalizedScreen model trained for 200 Adam steps on ten synthetic subjects.
inline const eyetheia::model::GazeNet& trained_tiny_base() {
    using namespace eyetheia;
    static const model::GazeNet net = [] {
        const auto cfg = model::ModelConfig::tiny(Space::NormalizedScreen);
        model::GazeNet n(cfg, 3);
        const auto data = synthetic_examples(cfg, 10, 40, 1);
        train::TrainConfig tc;
        tc.adam.lr = 2e-3;
        tc.batch_size = 8;
        tc.epochs = 4;
        train::fit(n, data, {}, tc);
        return n;
    }();
    return net;
}

// The default 13-target protocol for one fresh synthetic subject.
inline std::vector<eyetheia::calibration::RawSample> calibration_session(const eyetheia::ScreenGeometry& screen,
                                                                         std::uint64_t subject_seed) {
    using namespace eyetheia;
    std::uint64_t state = subject_seed;
    const auto subject = synthetic::random_subject(state);
    std::vector<calibration::RawSample> out;
    std::uint64_t k = 0;
    for (const auto& [x, y] : calibration::default_targets(screen)) {
        out.push_back({synthetic::render(subject, x / screen.width_px, y / screen.height_px, subject_seed * 31 + ++k),
                       x, y});
    }
    return out;
}

}  // namespace testutil
