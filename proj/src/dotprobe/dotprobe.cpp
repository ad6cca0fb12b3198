#include "eyetheia/dotprobe.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "eyetheia/errors.hpp"
#include "eyetheia/nn/params.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace eyetheia::dotprobe {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
void shuffle(std::vector<T>& v, std::uint64_t& state) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = std::min(static_cast<std::size_t>(nn::unit_uniform(state) * double(i)), i - 1);
        std::swap(v[i - 1], v[j]);
    }
}

Rect centered_rect(double cx_frac, const Layout& l, const ScreenGeometry& s) {
    const double w = l.width * s.width_px, h = l.height * s.height_px;
    const double cx = cx_frac * s.width_px, cy = 0.5 * s.height_px;
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

Side side_from(const std::string& s) {
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    throw DataError("bad side '" + s + "'");
}

}  // namespace

Catalog load_catalog(const fs::path& dir) {
    Catalog c;
    c.root = dir;
    std::ifstream in(dir / "pairs.csv");
    if (!in) throw DataError("stimulus catalog " + dir.string() + " has no pairs.csv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw DataError("pairs.csv line " + std::to_string(lineno) + ": expected negative_id,neutral_id");
        }
        StimulusPair p{strip(line.substr(0, comma)), strip(line.substr(comma + 1))};
        if (lineno == 1 && p.negative_id == "negative_id") continue;
        if (p.negative_id.empty() || p.neutral_id.empty()) {
            throw DataError("pairs.csv line " + std::to_string(lineno) + ": empty stimulus id");
        }
        c.pairs.push_back(std::move(p));
    }
    return c;
}

SessionPlan build_session(const Catalog& catalog, const ScreenGeometry& screen, std::uint64_t seed,
                          const Layout& layout) {
    if (catalog.pairs.size() < kTrialsPerSession) {
        throw DataError("stimulus catalog holds " + std::to_string(catalog.pairs.size()) + " pairs, " +
                        std::to_string(kTrialsPerSession) + " are required");
    }
    std::uint64_t state = seed;
    std::vector<std::size_t> order(catalog.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, state);
    std::vector<Side> neg(kTrialsPerSession), probe(kTrialsPerSession);
    for (std::size_t i = 0; i < kTrialsPerSession; ++i) {
        neg[i] = i < kTrialsPerSession / 2 ? Side::Left : Side::Right;
        probe[i] = neg[i];
    }
    shuffle(neg, state);
    shuffle(probe, state);

    SessionPlan plan;
    plan.screen = screen;
    const Rect left = centered_rect(layout.left_center, layout, screen);
    const Rect right = centered_rect(layout.right_center, layout, screen);
    if (left.x1 > right.x0) throw std::invalid_argument("stimulus rects overlap");
    for (std::size_t i = 0; i < kTrialsPerSession; ++i) {
        const auto& pair = catalog.pairs[order[i]];
        TrialSpec t;
        t.index = static_cast<int>(i);
        t.negative_side = neg[i];
        t.probe_side = probe[i];
        t.left_id = neg[i] == Side::Left ? pair.negative_id : pair.neutral_id;
        t.right_id = neg[i] == Side::Left ? pair.neutral_id : pair.negative_id;
        t.left_rect = left;
        t.right_rect = right;
        plan.trials.push_back(std::move(t));
    }
    return plan;
}

std::string_view to_string(MachinePhase phase) {
    switch (phase) {
        case MachinePhase::NotStarted: return "not_started";
        case MachinePhase::Fixation: return "fixation";
        case MachinePhase::Stimulus: return "stimulus";
        case MachinePhase::Probe: return "probe";
        case MachinePhase::Break: return "break";
        case MachinePhase::Finished: return "finished";
    }
    return "?";
}

Machine::Machine(SessionPlan plan, std::uint64_t seed, TimingConfig timing)
    : plan_(std::move(plan)), timing_(timing), rng_(seed) {
    if (plan_.trials.empty()) throw std::invalid_argument("session plan has no trials");
    if (timing_.fixation_min_ms > timing_.fixation_max_ms || timing_.fixation_min_ms < 0) {
        throw std::invalid_argument("bad fixation range");
    }
}

void Machine::start_trial(std::int64_t t) {
    current_ = {};
    current_.spec = plan_.trials[completed_];
    const auto span = timing_.fixation_max_ms - timing_.fixation_min_ms + 1;
    current_.planned_fixation_ms =
        timing_.fixation_min_ms +
        std::min<std::int64_t>(span - 1, static_cast<std::int64_t>(nn::unit_uniform(rng_) * double(span)));
    current_.fixation_onset_ms = t;
    phase_ = MachinePhase::Fixation;
}

StepResult Machine::advance(const Event& event) {
    if (last_t_ && event.t_ms < *last_t_) throw std::invalid_argument("event timestamps must not decrease");
    last_t_ = event.t_ms;
    const auto t = event.t_ms;
    const bool key = event.kind == Event::Kind::KeyPress;
    StepResult out;

    auto finish_trial = [&](std::optional<std::string> response) {
        current_.probe_offset_ms = t;
        if (response) {
            current_.response_key = std::move(response);
            current_.response_time_ms = t - current_.probe_onset_ms;
        }
        out.record = current_;
        ++completed_;
        if (completed_ == plan_.trials.size()) {
            phase_ = MachinePhase::Finished;
        } else if (completed_ == plan_.break_after) {
            phase_ = MachinePhase::Break;
            out.break_started = true;
        } else {
            start_trial(t);
        }
    };

    switch (phase_) {
        case MachinePhase::NotStarted:
            start_trial(t);
            if (key) current_.anticipatory.push_back({event.key, t});
            break;
        case MachinePhase::Fixation:
            if (key) {
                current_.anticipatory.push_back({event.key, t});
            } else if (t >= current_.fixation_onset_ms + current_.planned_fixation_ms) {
                current_.fixation_offset_ms = current_.stimulus_onset_ms = t;
                phase_ = MachinePhase::Stimulus;
            }
            break;
        case MachinePhase::Stimulus:
            if (key) {
                current_.anticipatory.push_back({event.key, t});
            } else if (t >= current_.stimulus_onset_ms + timing_.stimulus_ms) {
                current_.stimulus_offset_ms = current_.probe_onset_ms = t;
                phase_ = MachinePhase::Probe;
            }
            break;
        case MachinePhase::Probe:
            if (key) {
                finish_trial(event.key);
            } else if (t >= current_.probe_onset_ms + timing_.probe_timeout_ms) {
                finish_trial(std::nullopt);
            }
            break;
        case MachinePhase::Break:
            if (key) start_trial(t);
            break;
        case MachinePhase::Finished:
            break;
    }
    out.phase = phase_;
    return out;
}

void write_trial_log(std::ostream& out, std::span<const TrialRecord> records) {
    for (const auto& r : records) {
        const auto rect = [](const Rect& x) { return json::array({x.x0, x.y0, x.x1, x.y1}); };
        json j = {
            {"trial", r.spec.index},
            {"left_id", r.spec.left_id},
            {"right_id", r.spec.right_id},
            {"negative_side", metrics::to_string(r.spec.negative_side)},
            {"probe_side", metrics::to_string(r.spec.probe_side)},
            {"left_rect", rect(r.spec.left_rect)},
            {"right_rect", rect(r.spec.right_rect)},
            {"planned_fixation_ms", r.planned_fixation_ms},
            {"fixation_onset_ms", r.fixation_onset_ms},
            {"fixation_offset_ms", r.fixation_offset_ms},
            {"stimulus_onset_ms", r.stimulus_onset_ms},
            {"stimulus_offset_ms", r.stimulus_offset_ms},
            {"probe_onset_ms", r.probe_onset_ms},
            {"probe_offset_ms", r.probe_offset_ms},
            {"response_key", r.response_key ? json(*r.response_key) : json(nullptr)},
            {"response_time_ms", r.response_time_ms ? json(*r.response_time_ms) : json(nullptr)},
            {"anticipatory", json::array()},
            {"gaze_counts",
             {{"fixation", r.gaze_counts.fixation}, {"stimulus", r.gaze_counts.stimulus}, {"probe", r.gaze_counts.probe}}},
        };
        for (const auto& k : r.anticipatory) j["anticipatory"].push_back({{"key", k.key}, {"t_ms", k.t_ms}});
        out << j.dump() << '\n';
    }
}

std::vector<TrialRecord> parse_trial_log(std::istream& in) {
    std::vector<TrialRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        try {
            const json j = json::parse(line);
            TrialRecord r;
            const auto rect = [&](const char* key) {
                const auto a = j.at(key).get<std::vector<double>>();
                if (a.size() != 4) throw DataError(std::string(key) + " must have 4 numbers");
                return Rect{a[0], a[1], a[2], a[3]};
            };
            r.spec.index = j.at("trial").get<int>();
            r.spec.left_id = j.at("left_id").get<std::string>();
            r.spec.right_id = j.at("right_id").get<std::string>();
            r.spec.negative_side = side_from(j.at("negative_side").get<std::string>());
            r.spec.probe_side = side_from(j.at("probe_side").get<std::string>());
            r.spec.left_rect = rect("left_rect");
            r.spec.right_rect = rect("right_rect");
            r.planned_fixation_ms = j.value("planned_fixation_ms", std::int64_t{0});
            r.fixation_onset_ms = j.at("fixation_onset_ms").get<std::int64_t>();
            r.fixation_offset_ms = j.at("fixation_offset_ms").get<std::int64_t>();
            r.stimulus_onset_ms = j.at("stimulus_onset_ms").get<std::int64_t>();
            r.stimulus_offset_ms = j.at("stimulus_offset_ms").get<std::int64_t>();
            r.probe_onset_ms = j.at("probe_onset_ms").get<std::int64_t>();
            r.probe_offset_ms = j.at("probe_offset_ms").get<std::int64_t>();
            if (!j.at("response_key").is_null()) r.response_key = j["response_key"].get<std::string>();
            if (!j.at("response_time_ms").is_null()) r.response_time_ms = j["response_time_ms"].get<std::int64_t>();
            if (j.contains("anticipatory")) {
                for (const auto& k : j["anticipatory"]) {
                    r.anticipatory.push_back({k.at("key").get<std::string>(), k.at("t_ms").get<std::int64_t>()});
                }
            }
            if (j.contains("gaze_counts")) {
                const auto& g = j["gaze_counts"];
                r.gaze_counts = {g.value("fixation", std::size_t{0}), g.value("stimulus", std::size_t{0}),
                                 g.value("probe", std::size_t{0})};
            }
            if (!(r.fixation_onset_ms <= r.fixation_offset_ms && r.fixation_offset_ms <= r.stimulus_onset_ms &&
                  r.stimulus_onset_ms <= r.stimulus_offset_ms && r.stimulus_offset_ms <= r.probe_onset_ms &&
                  r.probe_onset_ms <= r.probe_offset_ms)) {
                throw DataError("phase timestamps out of order");
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError("trial log line " + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("trial log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<TrialRecord> read_trial_log(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trial log " + path.string());
    try {
        return parse_trial_log(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

metrics::GazeSeries align_gaze(std::span<const TrialRecord> records, std::span<const metrics::GazeLogRecord> log,
                               const ScreenGeometry& screen, std::string source) {
    std::vector<const TrialRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->fixation_onset_ms < b->fixation_onset_ms; });

    metrics::GazeSeries series{screen, {}, std::move(source)};
    series.samples.reserve(log.size());
    for (const auto& g : log) {
        metrics::GazeSample s{g.t_ms, g.x, g.y, g.valid, -1, Phase::InterTrial};
        // last trial whose fixation starts at or before the sample
        auto it = std::upper_bound(sorted.begin(), sorted.end(), g.t_ms,
                                   [](std::int64_t t, const TrialRecord* r) { return t < r->fixation_onset_ms; });
        if (it != sorted.begin()) {
            const TrialRecord& r = **std::prev(it);
            const auto t = g.t_ms;
            if (t >= r.fixation_onset_ms && t < r.fixation_offset_ms) s.phase = Phase::Fixation;
            else if (t >= r.stimulus_onset_ms && t < r.stimulus_offset_ms) s.phase = Phase::Stimulus;
            else if (t >= r.probe_onset_ms && t < r.probe_offset_ms) s.phase = Phase::Probe;
            if (s.phase != Phase::InterTrial) s.trial = r.spec.index;
        }
        series.samples.push_back(s);
    }
    return series;
}

void count_phase_samples(std::vector<TrialRecord>& records, const metrics::GazeSeries& series) {
    std::map<int, PhaseCounts> counts;
    for (const auto& s : series.samples) {
        if (s.trial < 0) continue;
        auto& c = counts[s.trial];
        if (s.phase == Phase::Fixation) ++c.fixation;
        if (s.phase == Phase::Stimulus) ++c.stimulus;
        if (s.phase == Phase::Probe) ++c.probe;
    }
    for (auto& r : records) r.gaze_counts = counts[r.spec.index];
}

std::map<int, std::vector<Rect>> trial_rois(std::span<const TrialRecord> records) {
    std::map<int, std::vector<Rect>> out;
    for (const auto& r : records) out[r.spec.index] = {r.spec.left_rect, r.spec.right_rect};
    return out;
}

namespace {

SourceReport source_report(const metrics::GazeSeries& s, std::span<const TrialRecord> records) {
    SourceReport rep;
    rep.source = s.source;
    const auto rois = trial_rois(records);
    for (double m : kRoiMargins) {
        try {
            rep.roi_accuracy[m] = metrics::roi_accuracy(s, rois, m);
        } catch (const metrics::UndefinedResult&) {
        }
    }
    try {
        rep.jitter_px = metrics::jitter(s);
    } catch (const metrics::UndefinedResult&) {
    }
    std::map<int, std::array<std::size_t, 3>> tally;  // total, left, right
    for (const auto& smp : s.samples) {
        if (smp.phase != Phase::Stimulus || smp.trial < 0) continue;
        ++tally[smp.trial][0];
        if (!smp.valid) continue;
        const auto it = rois.find(smp.trial);
        if (it == rois.end()) continue;
        if (it->second[0].contains(smp.x, smp.y)) ++tally[smp.trial][1];
        else if (it->second[1].contains(smp.x, smp.y)) ++tally[smp.trial][2];
    }
    for (const auto& r : records) {
        const auto& c = tally[r.spec.index];
        DwellFractions d{r.spec.index, 0, 0};
        if (c[0] > 0) {
            d.left = double(c[1]) / double(c[0]);
            d.right = double(c[2]) / double(c[0]);
        }
        rep.dwell.push_back(d);
    }
    return rep;
}

}  // namespace

SessionReport analyze_session(const metrics::GazeSeries& a, const metrics::GazeSeries* b,
                              std::span<const TrialRecord> records) {
    SessionReport rep;
    rep.sources.push_back(source_report(a, records));
    if (b) {
        rep.sources.push_back(source_report(*b, records));
        rep.side_agreement = metrics::side_agreement(a, *b);
    }
    return rep;
}

std::string report_json(const SessionReport& report) {
    json j;
    j["side_agreement"] = report.side_agreement ? json(*report.side_agreement) : json(nullptr);
    j["sources"] = json::array();
    for (const auto& s : report.sources) {
        json src;
        src["source"] = s.source;
        json roi = json::object();
        for (const auto& [m, v] : s.roi_accuracy) {
            std::ostringstream key;
            key << m;
            roi[key.str()] = v;
        }
        src["roi_accuracy"] = roi;
        src["jitter_px"] = s.jitter_px ? json(*s.jitter_px) : json(nullptr);
        src["dwell"] = json::array();
        for (const auto& d : s.dwell) src["dwell"].push_back({{"trial", d.trial}, {"left", d.left}, {"right", d.right}});
        j["sources"].push_back(src);
    }
    return j.dump(2);
}

}  // namespace eyetheia::dotprobe
