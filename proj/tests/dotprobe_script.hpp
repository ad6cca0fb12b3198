#pragma once

#include <random>

#include "eyetheia/dotprobe.hpp"

namespace testutil {

inline eyetheia::dotprobe::Catalog numbered_catalog(std::size_t n) {
    eyetheia::dotprobe::Catalog c;
    for (std::size_t i = 0; i < n; ++i) c.pairs.push_back({"neg" + std::to_string(i), "neu" + std::to_string(i)});
    return c;
}

struct ScriptedRun {
    std::vector<eyetheia::dotprobe::TrialRecord> records;
    std::vector<std::size_t> break_after_records;  // record counts at which a break began
    std::int64_t end_ms = 0;
};

// Drives a full session with ticks every `tick_ms`, a response `rt_ms` after each probe onset,
// a 3 s break, and one anticipatory press during the first stimulus.
inline ScriptedRun scripted_run(const eyetheia::dotprobe::SessionPlan& plan, std::uint64_t seed, double tick_ms = 1.0,
                                std::int64_t rt_ms = 350) {
    using namespace eyetheia::dotprobe;
    Machine m(plan, seed);
    ScriptedRun run;
    std::int64_t probe_onset = -1, break_start = -1;
    bool anticipated = false;
    for (std::int64_t k = 0; m.phase() != MachinePhase::Finished; ++k) {
        const auto t = static_cast<std::int64_t>(double(k) * tick_ms);
        auto step = m.advance(Event::tick(t));
        if (step.phase == MachinePhase::Stimulus && !anticipated) {
            m.advance(Event::press(t, "space"));
            anticipated = true;
        }
        if (step.phase == MachinePhase::Probe && probe_onset < 0) probe_onset = t;
        if (m.phase() == MachinePhase::Probe && probe_onset >= 0 && t >= probe_onset + rt_ms) {
            step = m.advance(Event::press(t, "f"));
            probe_onset = -1;
        }
        if (step.record) run.records.push_back(*step.record);
        if (step.break_started) {
            run.break_after_records.push_back(run.records.size());
            break_start = t;
        }
        if (m.phase() == MachinePhase::Break && t >= break_start + 3000) {
            m.advance(Event::press(t, "space"));
        }
        run.end_ms = t;
    }
    return run;
}

}  // namespace testutil
