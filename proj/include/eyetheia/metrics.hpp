#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eyetheia/gaze_point.hpp"

namespace eyetheia::metrics {

// A metric whose denominator is empty.
class UndefinedResult : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Point2 {
    double x = 0;
    double y = 0;
};

// sqrt(mean ||p - g||^2)
double rmse2d(std::span<const Point2> preds, std::span<const Point2> gts);
// mean ||p - g||
double mean_l2(std::span<const Point2> preds, std::span<const Point2> gts);
// 100 * mean ||p - g|| / diagonal(screen_i), one screen per sample
double l2_over_diagonal(std::span<const Point2> preds, std::span<const Point2> gts,
                        std::span<const ScreenGeometry> screens);

enum class Side { Left, Right };
std::string_view to_string(Side side);

// Left iff x < W / 2.
Side screen_side(double x_px, const ScreenGeometry& screen);

// Which part of a trial a gaze sample fell in.
enum class Phase { InterTrial, Fixation, Stimulus, Probe };
std::string_view to_string(Phase phase);

struct GazeSample {
    std::int64_t t_ms = 0;
    double x = 0;  // screen px; meaningless when !valid
    double y = 0;
    bool valid = false;
    int trial = -1;  // -1 outside every trial
    Phase phase = Phase::InterTrial;
};

struct GazeSeries {
    ScreenGeometry screen;
    std::vector<GazeSample> samples;  // timestamps nondecreasing
    std::string source;
};

struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

// Each edge moved outward by margin * W (horizontal) or margin * H (vertical), then clamped to the screen.
Rect expand(const Rect& r, double margin, const ScreenGeometry& screen);

inline constexpr std::int64_t kPairingToleranceMs = 50;

// Stimulus-phase, valid samples of a and b paired by mutual nearest timestamp within the tolerance;
// returns the fraction of pairs on the same screen side. Symmetric in a and b.
double side_agreement(const GazeSeries& a, const GazeSeries& b, std::int64_t tolerance_ms = kPairingToleranceMs);

// Fraction of valid stimulus-phase samples inside any margin-expanded rect of their trial.
// Trials missing from `rois` contribute no samples.
double roi_accuracy(const GazeSeries& series, const std::map<int, std::vector<Rect>>& rois, double margin);

// Mean distance between consecutive valid samples sharing (trial, phase). With only_phase set,
// samples of other phases are ignored.
double jitter(const GazeSeries& series, std::optional<Phase> only_phase = Phase::Stimulus);

struct GridSearchResult {
    double best_beta = 0;
    std::map<double, std::vector<double>> curves;  // validation loss per epoch, finite curves only
    std::vector<double> excluded;                  // betas whose curve held a non-finite value
};

// best_beta = argmin over betas of the curve minimum, ties to the smaller beta.
// Throws std::invalid_argument for no betas and UndefinedResult when every curve is excluded.
GridSearchResult beta_grid_search(const std::function<std::vector<double>(double beta)>& train_eval,
                                  std::vector<double> betas);

// Gaze log: "timestamp_ms,x_px,y_px,valid,source_tag" per line, optional header row.
// x/y may be empty for invalid samples.
struct GazeLogRecord {
    std::int64_t t_ms = 0;
    double x = 0, y = 0;
    bool valid = false;
    std::string source;
};

// Throws DataError naming the line on malformed input.
std::vector<GazeLogRecord> parse_gaze_log(std::istream& in);
std::vector<GazeLogRecord> read_gaze_log(const std::filesystem::path& path);
void write_gaze_log(std::ostream& out, std::span<const GazeLogRecord> records, bool header = true);

}  // namespace eyetheia::metrics
