#include <cmath>
#include <numbers>
#include <stdexcept>

#include "eyetheia/smoothing.hpp"

namespace eyetheia::smoothing {

void OneEuroConfig::validate() const {
    if (!(min_cutoff > 0) || !std::isfinite(min_cutoff)) throw std::invalid_argument("oneeuro.min_cutoff must be > 0");
    if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("oneeuro.beta must be >= 0");
    if (!(d_cutoff > 0) || !std::isfinite(d_cutoff)) throw std::invalid_argument("oneeuro.d_cutoff must be > 0");
}

double one_euro_alpha(double cutoff_hz, double period_s) {
    const double tau = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
    return 1.0 / (1.0 + tau / period_s);
}

OneEuroFilter::OneEuroFilter(OneEuroConfig config) : config_(config) { config_.validate(); }

void OneEuroFilter::reset() {
    last_t_ms_.reset();
    x_ = {};
    y_ = {};
}

std::optional<GazePoint> OneEuroFilter::filter(double t_ms, const GazePoint& p) {
    if (!std::isfinite(t_ms) || (last_t_ms_ && !(t_ms > *last_t_ms_))) return std::nullopt;
    if (last_t_ms_ && p.space != space_) throw std::invalid_argument("one-euro input changed coordinate space");
    if (!config_.enabled) {
        last_t_ms_ = t_ms;
        space_ = p.space;
        return p;
    }
    if (!last_t_ms_) {
        last_t_ms_ = t_ms;
        space_ = p.space;
        x_ = {p.x, 0.0};
        y_ = {p.y, 0.0};
        return p;
    }
    const double te = (t_ms - *last_t_ms_) / 1000.0;
    auto step = [&](Axis& a, double v) {
        const double dx = (v - a.value) / te;
        a.derivative += one_euro_alpha(config_.d_cutoff, te) * (dx - a.derivative);
        const double cutoff = config_.min_cutoff + config_.beta * std::abs(a.derivative);
        a.value += one_euro_alpha(cutoff, te) * (v - a.value);
    };
    step(x_, p.x);
    step(y_, p.y);
    last_t_ms_ = t_ms;
    GazePoint out = p;
    out.x = x_.value;
    out.y = y_.value;
    return out;
}

}  // namespace eyetheia::smoothing
