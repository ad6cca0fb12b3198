#include "eyetheia/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace eyetheia::nn {

namespace {

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("grad_check: non-finite ") + what);
    return v;
}

std::vector<std::size_t> sample_indices(std::size_t size, std::size_t wanted, std::uint64_t& rng) {
    std::vector<std::size_t> idx;
    if (size <= wanted) {
        idx.resize(size);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    }
    while (idx.size() < wanted) {
        const auto i = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(size));
        if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

GradCheckReport grad_check(const std::function<double(bool)>& objective, std::span<const GradProbe> probes,
                           const GradCheckOptions& options) {
    if (!(options.eps >= 1e-4 && options.eps <= 1e-2)) {
        throw std::invalid_argument("grad_check: eps must lie in [1e-4, 1e-2]");
    }
    checked(objective(true), "loss");
    // objective(false) is allowed to scribble on grad tensors; keep a copy
    std::vector<TensorD> analytic;
    analytic.reserve(probes.size());
    for (const auto& p : probes) {
        if (!p.value || !p.grad) throw std::invalid_argument("grad_check: probe '" + p.name + "' is incomplete");
        if (p.grad->shape() != p.value->shape()) throw ShapeError("grad_check: probe '" + p.name + "' grad shape mismatch");
        if (!p.grad->all_finite()) throw NumericError("grad_check: non-finite analytic gradient in '" + p.name + "'");
        analytic.push_back(*p.grad);
    }

    GradCheckReport report;
    std::uint64_t rng = options.seed;
    const std::uint64_t base_regime = options.regime ? options.regime() : 0;
    for (std::size_t t = 0; t < probes.size(); ++t) {
        TensorD& value = *probes[t].value;
        double worst = 0.0;
        // oversample candidates so entries dropped at kinks can be replaced
        const auto candidates = sample_indices(value.size(), options.samples_per_tensor * 4, rng);
        std::size_t done = 0;
        for (std::size_t i : candidates) {
            if (done == options.samples_per_tensor) break;
            const double original = value[i];
            value[i] = original + options.eps;
            const double plus = checked(objective(false), "loss");
            const bool plus_smooth = !options.regime || options.regime() == base_regime;
            value[i] = original - options.eps;
            const double minus = checked(objective(false), "loss");
            const bool minus_smooth = !options.regime || options.regime() == base_regime;
            value[i] = original;
            if (!plus_smooth || !minus_smooth) {
                ++report.skipped_at_kinks;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * options.eps);
            const double a = analytic[t][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
            ++report.checked;
            ++done;
        }
        report.per_tensor[probes[t].name] = worst;
        report.max_relative_error = std::max(report.max_relative_error, worst);
    }
    return report;
}

GradCheckReport grad_check(const std::function<double(BasicParamSet<double>&, bool)>& objective,
                           BasicParamSet<double>& params, const GradCheckOptions& options) {
    std::vector<GradProbe> probes;
    for (auto& [name, p] : params.layers()) {
        probes.push_back({name + ".weights", &p.weights, &p.grad_weights});
        probes.push_back({name + ".bias", &p.bias, &p.grad_bias});
    }
    return grad_check([&](bool want) { return objective(params, want); }, probes, options);
}

}  // namespace eyetheia::nn
