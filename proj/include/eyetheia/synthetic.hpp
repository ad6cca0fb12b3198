#pragma once

#include <cstdint>

#include "eyetheia/preprocess.hpp"

// Procedural face frames whose eye pixels encode the gaze target: a bright pupil blob sits at the
// target-proportional position inside each eye, shifted by a per-subject bias.
namespace eyetheia::synthetic {

struct Subject {
    double face_cx = 0.5;  // face center, fraction of frame size
    double face_cy = 0.5;
    double scale = 1.0;    // face size multiplier
    double bias_x = 0.0;   // pupil offset in normalized-screen units
    double bias_y = 0.0;
    float skin = 170.0f;
};

struct FrameSize {
    std::size_t width = 160;
    std::size_t height = 120;
};

// Draws a subject from `state` (advanced in place).
Subject random_subject(std::uint64_t& state);

// Renders the frame for gaze target (u, v) in [0, 1]^2 with landmarks attached.
// `noise_seed` drives pixel noise and a small head jitter.
preprocess::Frame render(const Subject& subject, double u, double v, std::uint64_t noise_seed, FrameSize size = {});

// Same frame with the landmarks removed.
preprocess::Frame render_faceless(const Subject& subject, double u, double v, std::uint64_t noise_seed,
                                  FrameSize size = {});

}  // namespace eyetheia::synthetic
