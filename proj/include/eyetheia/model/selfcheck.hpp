#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eyetheia::model {

struct GradCheckRow {
    std::string name;  // "layer/conv2d", "loss/smooth_l1", "net/<tensor>"
    double max_relative_error = 0;
    std::size_t checked = 0;
    std::size_t skipped_at_kinks = 0;
};

struct SelfCheckReport {
    std::vector<GradCheckRow> rows;
    double max_relative_error = 0;
    double threshold = 1e-3;

    bool passed() const { return max_relative_error < threshold; }
};

struct SelfCheckOptions {
    std::uint64_t seed = 7;
    std::size_t layer_trials = 20;      // random shapes per layer kind
    std::size_t samples_per_tensor = 8;
    // Test hook: scales every analytic gradient by 1.01 so the check must fail.
    bool inject_fault = false;
};

// Finite-difference check, in double precision, of every layer kind on random shapes, of both
// losses, and of every parameter tensor of the tiny network.
SelfCheckReport gradcheck_tiny(const SelfCheckOptions& options = {});

}  // namespace eyetheia::model
