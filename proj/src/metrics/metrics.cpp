#include "eyetheia/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eyetheia::metrics {

namespace {

void check_pairs(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("prediction and ground-truth counts differ");
    if (a == 0) throw UndefinedResult("metric over an empty sample set");
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool eligible(const GazeSample& s) { return s.valid && s.phase == Phase::Stimulus; }

}  // namespace

double rmse2d(std::span<const Point2> preds, std::span<const Point2> gts) {
    check_pairs(preds.size(), gts.size());
    double sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double dx = preds[i].x - gts[i].x, dy = preds[i].y - gts[i].y;
        sum += dx * dx + dy * dy;
    }
    return std::sqrt(sum / double(preds.size()));
}

double mean_l2(std::span<const Point2> preds, std::span<const Point2> gts) {
    check_pairs(preds.size(), gts.size());
    double sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += dist(preds[i], gts[i]);
    return sum / double(preds.size());
}

double l2_over_diagonal(std::span<const Point2> preds, std::span<const Point2> gts,
                        std::span<const ScreenGeometry> screens) {
    check_pairs(preds.size(), gts.size());
    if (screens.size() != preds.size()) throw std::invalid_argument("one screen per sample is required");
    double sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += dist(preds[i], gts[i]) / screens[i].diagonal();
    return 100.0 * sum / double(preds.size());
}

std::string_view to_string(Side side) { return side == Side::Left ? "left" : "right"; }

Side screen_side(double x_px, const ScreenGeometry& screen) {
    return x_px < screen.width_px / 2.0 ? Side::Left : Side::Right;
}

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::InterTrial: return "inter_trial";
        case Phase::Fixation: return "fixation";
        case Phase::Stimulus: return "stimulus";
        case Phase::Probe: return "probe";
    }
    return "?";
}

Rect expand(const Rect& r, double margin, const ScreenGeometry& screen) {
    if (!(margin >= 0)) throw std::invalid_argument("ROI margin must be >= 0");
    const double mx = margin * screen.width_px, my = margin * screen.height_px;
    return {std::max(0.0, r.x0 - mx), std::max(0.0, r.y0 - my), std::min(screen.width_px, r.x1 + mx),
            std::min(screen.height_px, r.y1 + my)};
}

double side_agreement(const GazeSeries& a, const GazeSeries& b, std::int64_t tolerance_ms) {
    std::vector<const GazeSample*> ea, eb;
    for (const auto& s : a.samples)
        if (eligible(s)) ea.push_back(&s);
    for (const auto& s : b.samples)
        if (eligible(s)) eb.push_back(&s);

    // nearest partner of each sample in the other list (earlier one on ties)
    auto nearest = [](const std::vector<const GazeSample*>& from, const std::vector<const GazeSample*>& to) {
        std::vector<std::ptrdiff_t> out(from.size(), -1);
        std::size_t j = 0;
        for (std::size_t i = 0; i < from.size(); ++i) {
            const auto t = from[i]->t_ms;
            while (j + 1 < to.size() && to[j + 1]->t_ms <= t) ++j;
            std::ptrdiff_t best = -1;
            std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
            for (std::size_t k = j; k < std::min(to.size(), j + 2); ++k) {
                const auto d = std::llabs(to[k]->t_ms - t);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<std::ptrdiff_t>(k);
                }
            }
            out[i] = best;
        }
        return out;
    };
    const auto ab = nearest(ea, eb), ba = nearest(eb, ea);
    std::size_t pairs = 0, agree = 0;
    for (std::size_t i = 0; i < ea.size(); ++i) {
        const auto j = ab[i];
        if (j < 0 || ba[static_cast<std::size_t>(j)] != static_cast<std::ptrdiff_t>(i)) continue;
        const auto* pa = ea[i];
        const auto* pb = eb[static_cast<std::size_t>(j)];
        if (std::llabs(pa->t_ms - pb->t_ms) > tolerance_ms) continue;
        ++pairs;
        if (screen_side(pa->x, a.screen) == screen_side(pb->x, b.screen)) ++agree;
    }
    if (pairs == 0) throw UndefinedResult("no overlapping valid stimulus-phase sample pairs");
    return double(agree) / double(pairs);
}

double roi_accuracy(const GazeSeries& series, const std::map<int, std::vector<Rect>>& rois, double margin) {
    std::map<int, std::vector<Rect>> expanded;
    for (const auto& [trial, rects] : rois)
        for (const auto& r : rects) expanded[trial].push_back(expand(r, margin, series.screen));
    std::size_t total = 0, hits = 0;
    for (const auto& s : series.samples) {
        if (!eligible(s)) continue;
        const auto it = expanded.find(s.trial);
        if (it == expanded.end()) continue;
        ++total;
        if (std::any_of(it->second.begin(), it->second.end(), [&](const Rect& r) { return r.contains(s.x, s.y); })) {
            ++hits;
        }
    }
    if (total == 0) throw UndefinedResult("no valid stimulus-phase samples for ROI accuracy");
    return double(hits) / double(total);
}

double jitter(const GazeSeries& series, std::optional<Phase> only_phase) {
    const GazeSample* prev = nullptr;
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : series.samples) {
        if (!s.valid || (only_phase && s.phase != *only_phase)) continue;
        if (prev && prev->trial == s.trial && prev->phase == s.phase) {
            sum += std::hypot(s.x - prev->x, s.y - prev->y);
            ++n;
        }
        prev = &s;
    }
    if (n == 0) throw UndefinedResult("no consecutive valid sample pairs for jitter");
    return sum / double(n);
}

GridSearchResult beta_grid_search(const std::function<std::vector<double>(double beta)>& train_eval,
                                  std::vector<double> betas) {
    if (betas.empty()) throw std::invalid_argument("beta grid is empty");
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
    GridSearchResult res;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double beta : betas) {
        auto curve = train_eval(beta);
        const bool finite =
            !curve.empty() && std::all_of(curve.begin(), curve.end(), [](double v) { return std::isfinite(v); });
        if (!finite) {
            res.excluded.push_back(beta);
            continue;
        }
        const double m = *std::min_element(curve.begin(), curve.end());
        if (m < best) {  // strict: ascending order keeps the smaller beta on ties
            best = m;
            res.best_beta = beta;
            found = true;
        }
        res.curves.emplace(beta, std::move(curve));
    }
    if (!found) throw UndefinedResult("every beta produced a non-finite loss curve");
    return res;
}

}  // namespace eyetheia::metrics
