#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "eyetheia/nn/params.hpp"

namespace eyetheia::nn {

struct GradCheckOptions {
    double eps = 1e-3;                    // central-difference step, must lie in [1e-4, 1e-2]
    std::size_t samples_per_tensor = 16;  // entries probed per tensor (all of them if the tensor is smaller)
    std::uint64_t seed = 7;
    // Optional: signature of the piecewise-linear regime (ReLU masks, pool argmax) of the most recent
    // objective evaluation. A probe whose +/-eps evaluations change the regime straddles a kink, where
    // central differences are not a valid oracle; that entry is replaced by another sample.
    std::function<std::uint64_t()> regime;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::map<std::string, double> per_tensor;  // max relative error per probed tensor
    std::size_t checked = 0;
    std::size_t skipped_at_kinks = 0;
};

// A tensor whose entries are perturbed, and where the objective leaves its analytic gradient.
struct GradProbe {
    std::string name;
    TensorD* value = nullptr;
    const TensorD* grad = nullptr;
};

// objective(want_grads) returns a scalar loss; when want_grads is true it must also write the
// analytic gradients into every probe's grad tensor. Relative error per entry is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). Throws NumericError on non-finite output.
GradCheckReport grad_check(const std::function<double(bool want_grads)>& objective, std::span<const GradProbe> probes,
                           const GradCheckOptions& options = {});

// Convenience form probing every weight and bias tensor of a parameter set.
GradCheckReport grad_check(const std::function<double(BasicParamSet<double>&, bool want_grads)>& objective,
                           BasicParamSet<double>& params, const GradCheckOptions& options = {});

}  // namespace eyetheia::nn
