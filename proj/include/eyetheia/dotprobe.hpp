#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eyetheia/gaze_point.hpp"
#include "eyetheia/metrics.hpp"

namespace eyetheia::dotprobe {

using metrics::Phase;
using metrics::Rect;
using metrics::Side;

struct StimulusPair {
    std::string negative_id;
    std::string neutral_id;
};

// Directory of images plus pairs.csv ("negative_id,neutral_id", optional header).
struct Catalog {
    std::filesystem::path root;
    std::vector<StimulusPair> pairs;
};

Catalog load_catalog(const std::filesystem::path& dir);

inline constexpr std::size_t kTrialsPerSession = 96;
inline constexpr std::size_t kBreakAfter = 48;

struct Layout {
    double left_center = 0.25;  // rect centers, fraction of screen width
    double right_center = 0.75;
    double width = 0.30;        // rect size, fraction of screen
    double height = 0.40;
};

struct TrialSpec {
    int index = 0;  // 0-based
    std::string left_id;
    std::string right_id;
    Side negative_side = Side::Left;
    Side probe_side = Side::Left;
    Rect left_rect;
    Rect right_rect;

    friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

struct SessionPlan {
    ScreenGeometry screen;
    std::vector<TrialSpec> trials;
    std::size_t break_after = kBreakAfter;
};

// 96 trials from a seeded shuffle of the catalog; negative and probe sides each balanced 48/48.
// Throws DataError for fewer than 96 pairs.
SessionPlan build_session(const Catalog& catalog, const ScreenGeometry& screen, std::uint64_t seed,
                          const Layout& layout = {});

struct TimingConfig {
    std::int64_t fixation_min_ms = 500;
    std::int64_t fixation_max_ms = 1500;
    std::int64_t stimulus_ms = 2000;
    std::int64_t probe_timeout_ms = 5000;
};

struct KeyPress {
    std::string key;
    std::int64_t t_ms = 0;

    friend bool operator==(const KeyPress&, const KeyPress&) = default;
};

struct PhaseCounts {
    std::size_t fixation = 0;
    std::size_t stimulus = 0;
    std::size_t probe = 0;

    friend bool operator==(const PhaseCounts&, const PhaseCounts&) = default;
};

struct TrialRecord {
    TrialSpec spec;
    std::int64_t planned_fixation_ms = 0;
    std::int64_t fixation_onset_ms = 0;
    std::int64_t fixation_offset_ms = 0;   // == stimulus onset
    std::int64_t stimulus_onset_ms = 0;
    std::int64_t stimulus_offset_ms = 0;   // == probe onset
    std::int64_t probe_onset_ms = 0;
    std::int64_t probe_offset_ms = 0;      // keypress or timeout
    std::optional<std::string> response_key;
    std::optional<std::int64_t> response_time_ms;  // keypress - probe onset
    std::vector<KeyPress> anticipatory;            // presses outside the probe phase
    PhaseCounts gaze_counts;

    bool responded() const { return response_key.has_value(); }
    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

enum class MachinePhase { NotStarted, Fixation, Stimulus, Probe, Break, Finished };
std::string_view to_string(MachinePhase phase);

struct Event {
    enum class Kind { Tick, KeyPress } kind = Kind::Tick;
    std::int64_t t_ms = 0;
    std::string key;

    static Event tick(std::int64_t t) { return {Kind::Tick, t, {}}; }
    static Event press(std::int64_t t, std::string key) { return {Kind::KeyPress, t, std::move(key)}; }
};

struct StepResult {
    MachinePhase phase = MachinePhase::NotStarted;
    std::optional<TrialRecord> record;  // emitted when a trial completes
    bool break_started = false;
};

// Fixation -> Stimulus -> Probe per trial. Phase changes are observed at event times; each event moves
// at most one phase. The first event starts trial 0. A keypress ends the probe (or the break that follows
// record 48); the probe also ends after the timeout. Other keypresses are logged as anticipatory.
class Machine {
public:
    Machine(SessionPlan plan, std::uint64_t seed, TimingConfig timing = {});

    // Throws std::invalid_argument on a timestamp earlier than the previous event.
    StepResult advance(const Event& event);

    MachinePhase phase() const { return phase_; }
    std::size_t completed() const { return completed_; }
    const SessionPlan& plan() const { return plan_; }

private:
    void start_trial(std::int64_t t);

    SessionPlan plan_;
    TimingConfig timing_;
    std::uint64_t rng_;
    MachinePhase phase_ = MachinePhase::NotStarted;
    std::size_t completed_ = 0;
    std::optional<std::int64_t> last_t_;
    TrialRecord current_;
};

// One JSON object per line.
void write_trial_log(std::ostream& out, std::span<const TrialRecord> records);
std::vector<TrialRecord> parse_trial_log(std::istream& in);
std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path);

// Labels each sample (trial, phase) by half-open interval containment: fixation [onset, offset),
// stimulus [onset, offset), probe [onset, offset). Everything else, including the break, is inter-trial.
metrics::GazeSeries align_gaze(std::span<const TrialRecord> records, std::span<const metrics::GazeLogRecord> log,
                               const ScreenGeometry& screen, std::string source = {});

// Per-phase sample counts of each trial from an aligned series.
void count_phase_samples(std::vector<TrialRecord>& records, const metrics::GazeSeries& series);

struct DwellFractions {
    int trial = 0;
    double left = 0;   // valid stimulus samples inside the left rect / all stimulus samples
    double right = 0;
};

struct SourceReport {
    std::string source;
    std::map<double, double> roi_accuracy;  // margin -> accuracy
    std::optional<double> jitter_px;
    std::vector<DwellFractions> dwell;
};

struct SessionReport {
    std::optional<double> side_agreement;
    std::vector<SourceReport> sources;
};

inline constexpr double kRoiMargins[] = {0.0, 0.05, 0.10};

// Both stimulus rects of a trial count as its ROI.
std::map<int, std::vector<Rect>> trial_rois(std::span<const TrialRecord> records);

SessionReport analyze_session(const metrics::GazeSeries& a, const metrics::GazeSeries* b,
                              std::span<const TrialRecord> records);

std::string report_json(const SessionReport& report);

}  // namespace eyetheia::dotprobe
