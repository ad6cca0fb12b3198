#include "eyetheia/training.hpp"

#include <numeric>

#include "eyetheia/errors.hpp"
#include "eyetheia/geometry.hpp"

namespace eyetheia::train {

namespace {

std::pair<model::BatchInput<float>, nn::Tensor> make_batch(std::span<const Example> set,
                                                           std::span<const std::size_t> idx,
                                                           const model::ModelConfig& config) {
    std::vector<model::InputBundle> bundles;
    bundles.reserve(idx.size());
    nn::Tensor target({idx.size(), 2});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& ex = set[idx[i]];
        bundles.push_back(ex.bundle);
        target[2 * i] = static_cast<float>(ex.target_x);
        target[2 * i + 1] = static_cast<float>(ex.target_y);
    }
    return {model::stack<float>(bundles, config), std::move(target)};
}

bool grads_finite(const nn::ParamSet& params) {
    for (const auto& [name, p] : params.layers()) {
        if (!p.grad_weights.all_finite() || !p.grad_bias.all_finite()) return false;
    }
    return true;
}

}  // namespace

ExampleSet build_examples(std::span<const dataset::SubjectRecord> subjects, const preprocess::MeanImages& means,
                          const model::ModelConfig& config) {
    ExampleSet out;
    for (const auto& rec : subjects) {
        for (const auto& s : rec.samples) {
            const auto frame = dataset::load_frame(s);
            if (!frame.landmarks) {
                ++out.skipped_no_face;
                continue;
            }
            Example ex;
            ex.bundle = preprocess::make_bundle(frame, means, config);
            const auto t = geometry::from_px({s.x_px, s.y_px, Space::ScreenPx, std::nullopt, true}, config.output_space, rec.screen);
            ex.target_x = t.x;
            ex.target_y = t.y;
            ex.screen = rec.screen;
            ex.subject_id = rec.subject_id;
            out.examples.push_back(std::move(ex));
        }
    }
    return out;
}

double evaluate_loss(const model::GazeNet& net, std::span<const Example> set, const nn::LossConfig& loss) {
    if (set.empty()) throw DataError("cannot evaluate on an empty set");
    constexpr std::size_t kChunk = 64;
    double total = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.size(); start += kChunk) {
        idx.resize(std::min(kChunk, set.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        auto [batch, target] = make_batch(set, idx, net.config());
        total += double(nn::compute_loss(loss, net.forward(batch), target).value) * double(idx.size());
    }
    return total / double(set.size());
}

std::vector<std::pair<double, double>> predict_all(const model::GazeNet& net, std::span<const Example> set) {
    std::vector<std::pair<double, double>> out;
    out.reserve(set.size());
    constexpr std::size_t kChunk = 64;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.size(); start += kChunk) {
        idx.resize(std::min(kChunk, set.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        auto batch = make_batch(set, idx, net.config()).first;
        const auto y = net.forward(batch);
        for (std::size_t i = 0; i < idx.size(); ++i) out.emplace_back(y[2 * i], y[2 * i + 1]);
    }
    return out;
}

std::vector<EpochStats> fit(model::GazeNet& net, std::span<const Example> train_set, std::span<const Example> val_set,
                            const TrainConfig& config, const std::function<void(const EpochStats&)>& on_epoch) {
    if (train_set.empty()) throw DataError("training set is empty");
    if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    auto state = nn::make_adam_state(net.params(), config.adam);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t rng = config.seed;
    std::vector<EpochStats> history;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(nn::unit_uniform(rng) * double(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        double sum = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t n = std::min(config.batch_size, order.size() - start);
            auto [batch, target] = make_batch(train_set, std::span(order).subspan(start, n), net.config());
            model::ForwardTrace<float> trace;
            const auto pred = net.forward(batch, &trace);
            const auto loss = nn::compute_loss(config.loss, pred, target);
            if (!std::isfinite(loss.value)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
            }
            net.params().zero_grad();
            net.backward(trace, loss.grad);
            if (!grads_finite(net.params())) {
                throw NumericError("non-finite gradient at epoch " + std::to_string(epoch));
            }
            nn::adam_step(net.params(), state);
            sum += loss.value;
            ++batches;
        }
        EpochStats st{epoch, sum / double(batches), std::nullopt};
        if (!val_set.empty()) st.val_loss = evaluate_loss(net, val_set, config.loss);
        history.push_back(st);
        if (on_epoch) on_epoch(st);
    }
    return history;
}

}  // namespace eyetheia::train
