#include "eyetheia/model/selfcheck.hpp"

#include <algorithm>
#include <random>

#include "eyetheia/model/gaze_net.hpp"
#include "eyetheia/nn/gradcheck.hpp"
#include "eyetheia/nn/loss.hpp"

namespace eyetheia::model {

namespace {

using nn::Shape;
using nn::TensorD;

constexpr double kFault = 1.01;

TensorD random_tensor(const Shape& shape, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    TensorD t(shape);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

std::size_t rand_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

void scale(TensorD& t, double k) {
    for (auto& v : t.data()) v *= k;
}

// objective = <layer(inputs), probe>
nn::GradCheckReport check_layer(const nn::LayerSpec& spec, std::vector<TensorD> inputs, std::mt19937_64& rng,
                                const SelfCheckOptions& opt) {
    TensorD weights, bias, gw, gb;
    const bool has_p = nn::has_parameters(spec);
    if (has_p) {
        weights = random_tensor(nn::weight_shape(spec), rng);
        bias = random_tensor(nn::bias_shape(spec), rng);
    }
    std::vector<Shape> shapes;
    for (auto& t : inputs) shapes.push_back(t.shape());
    const TensorD probe = random_tensor(nn::output_shape(spec, shapes), rng);
    std::vector<TensorD> input_grads(inputs.size());

    auto objective = [&](bool want) {
        nn::LayerParams<double> lp;
        if (has_p) lp = {&weights, &bias};
        nn::ForwardContext<double> ctx;
        const auto out = nn::forward<double>(spec, lp, std::span<const TensorD>(inputs), &ctx);
        double loss = 0;
        for (std::size_t i = 0; i < out.size(); ++i) loss += out[i] * probe[i];
        if (want) {
            auto g = nn::backward<double>(ctx, lp, probe);
            for (std::size_t i = 0; i < inputs.size(); ++i) input_grads[i] = std::move(g.input_grads[i]);
            if (has_p) {
                gw = std::move(g.grad_weights);
                gb = std::move(g.grad_bias);
            }
            if (opt.inject_fault) {
                for (auto& t : input_grads) scale(t, kFault);
                if (has_p) scale(gw, kFault);
            }
        }
        return loss;
    };
    objective(true);
    std::vector<nn::GradProbe> probes;
    for (std::size_t i = 0; i < inputs.size(); ++i) probes.push_back({"input", &inputs[i], &input_grads[i]});
    if (has_p) {
        probes.push_back({"weights", &weights, &gw});
        probes.push_back({"bias", &bias, &gb});
    }
    nn::GradCheckOptions gopt;
    gopt.eps = 1e-4;
    gopt.samples_per_tensor = 12;
    gopt.seed = rng();
    return nn::grad_check(objective, probes, gopt);
}

void merge(GradCheckRow& row, const nn::GradCheckReport& r) {
    row.max_relative_error = std::max(row.max_relative_error, r.max_relative_error);
    row.checked += r.checked;
    row.skipped_at_kinks += r.skipped_at_kinks;
}

nn::GradCheckReport check_loss(const nn::LossConfig& loss, std::mt19937_64& rng, const SelfCheckOptions& opt) {
    const std::size_t n = rand_int(rng, 1, 6);
    TensorD pred = random_tensor({n, 2}, rng);
    const TensorD target = random_tensor({n, 2}, rng);
    TensorD grad;
    auto objective = [&](bool want) {
        auto r = nn::compute_loss<double>(loss, pred, target);
        if (want) {
            grad = std::move(r.grad);
            if (opt.inject_fault) scale(grad, kFault);
        }
        return r.value;
    };
    objective(true);
    const nn::GradProbe probe{"pred", &pred, &grad};
    nn::GradCheckOptions gopt;
    gopt.eps = 1e-4;
    gopt.samples_per_tensor = 12;
    gopt.seed = rng();
    // Smooth-L1 has a kink at |r| = beta; its second derivative jumps, so probes right on it are unlikely
    // but would be skipped by the regime signature below.
    gopt.regime = [&] {
        std::uint64_t sig = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            sig = sig * 3 + (std::abs(target[i] - pred[i]) < loss.beta ? 1 : 2);
        }
        return sig;
    };
    return nn::grad_check(objective, std::span<const nn::GradProbe>(&probe, 1), gopt);
}

}  // namespace

SelfCheckReport gradcheck_tiny(const SelfCheckOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    std::vector<GradCheckRow> layers{{"layer/conv2d"}, {"layer/maxpool2d"}, {"layer/relu"},
                                     {"layer/fully_connected"}, {"layer/concat"}, {"layer/flatten"}};
    for (std::size_t t = 0; t < opt.layer_trials; ++t) {
        const std::size_t n = rand_int(rng, 1, 2);
        const std::size_t k = rand_int(rng, 1, 3);
        const nn::Conv2D conv{rand_int(rng, 1, 3), rand_int(rng, 1, 3), k, k, rand_int(rng, 1, 2), rand_int(rng, 0, 1)};
        merge(layers[0], check_layer(conv, {random_tensor({n, conv.in_channels, 5, 6}, rng)}, rng, opt));
        merge(layers[1], check_layer(nn::MaxPool2D{2, 2}, {random_tensor({n, 2, 6, 4}, rng)}, rng, opt));
        merge(layers[2], check_layer(nn::ReLU{}, {random_tensor({n, 7}, rng)}, rng, opt));
        const nn::FullyConnected fc{rand_int(rng, 1, 6), rand_int(rng, 1, 4)};
        merge(layers[3], check_layer(fc, {random_tensor({n, fc.in_features}, rng)}, rng, opt));
        merge(layers[4], check_layer(nn::Concat{}, {random_tensor({n, 3}, rng), random_tensor({n, 2}, rng)}, rng, opt));
        merge(layers[5], check_layer(nn::Flatten{}, {random_tensor({n, 2, 3, 2}, rng)}, rng, opt));
    }

    GradCheckRow euclid{"loss/euclidean"}, huber{"loss/smooth_l1"};
    for (std::size_t t = 0; t < opt.layer_trials; ++t) {
        merge(euclid, check_loss({nn::LossKind::EuclideanMSE, 1.0}, rng, opt));
        merge(huber, check_loss({nn::LossKind::SmoothL1, 0.05 + 0.5 * std::uniform_real_distribution<>(0, 1)(rng)},
                                rng, opt));
    }

    // Whole tiny network on a two-sample batch under Smooth-L1.
    const auto config = ModelConfig::tiny(Space::NormalizedScreen);
    auto net = GazeNet(config, opt.seed).cast<double>();
    std::vector<InputBundle> bundles(2);
    for (auto& b : bundles) {
        b.left_eye = random_tensor({3, config.eye_h, config.eye_w}, rng).cast<float>();
        b.right_eye = random_tensor({3, config.eye_h, config.eye_w}, rng).cast<float>();
        b.face = random_tensor({3, config.face_h, config.face_w}, rng).cast<float>();
        b.face_grid = nn::Tensor({config.grid_size * config.grid_size});
        for (auto& v : b.face_grid.data()) v = rand_int(rng, 0, 1);
    }
    const auto batch = stack<double>(bundles, config);
    const TensorD target({2, 2}, std::vector<double>{0.2, 0.8, 0.6, 0.1});
    const nn::LossConfig loss{nn::LossKind::SmoothL1, 0.1};
    ForwardTrace<double> last;
    auto objective = [&](nn::BasicParamSet<double>& params, bool want) {
        if (want) params.zero_grad();
        last = ForwardTrace<double>();
        const auto out = net.forward(batch, &last);
        const auto l = nn::compute_loss<double>(loss, out, target);
        if (want) {
            net.backward(last, l.grad);
            if (opt.inject_fault) {
                for (auto& [name, p] : params.layers()) {
                    scale(p.grad_weights, kFault);
                    scale(p.grad_bias, kFault);
                }
            }
        }
        return l.value;
    };
    nn::GradCheckOptions gopt;
    gopt.eps = 1e-4;
    gopt.samples_per_tensor = opt.samples_per_tensor;
    gopt.seed = opt.seed;
    gopt.regime = [&] { return regime_signature(last); };
    const auto net_report = nn::grad_check(objective, net.params(), gopt);

    SelfCheckReport report;
    report.rows = std::move(layers);
    report.rows.push_back(euclid);
    report.rows.push_back(huber);
    for (const auto& [name, err] : net_report.per_tensor) report.rows.push_back({"net/" + name, err, 0, 0});
    report.rows.push_back({"net/total", net_report.max_relative_error, net_report.checked,
                           net_report.skipped_at_kinks});
    for (const auto& r : report.rows) report.max_relative_error = std::max(report.max_relative_error, r.max_relative_error);
    return report;
}

}  // namespace eyetheia::model
