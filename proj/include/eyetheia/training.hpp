#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "eyetheia/dataset.hpp"
#include "eyetheia/model/gaze_net.hpp"
#include "eyetheia/nn/loss.hpp"
#include "eyetheia/nn/optim.hpp"
#include "eyetheia/preprocess.hpp"

namespace eyetheia::train {

// One preprocessed sample with its target in the model's output space.
struct Example {
    model::InputBundle bundle;
    double target_x = 0;
    double target_y = 0;
    ScreenGeometry screen;  // for pixel-space error reporting
    std::string subject_id;
};

struct ExampleSet {
    std::vector<Example> examples;
    std::size_t skipped_no_face = 0;
};

// Preprocesses every sample of the given subjects; frames without a face are counted and skipped.
ExampleSet build_examples(std::span<const dataset::SubjectRecord> subjects, const preprocess::MeanImages& means,
                          const model::ModelConfig& config);

struct TrainConfig {
    nn::LossConfig loss;
    nn::AdamConfig adam;
    std::size_t epochs = 15;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;  // minibatch shuffling
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0;  // mean minibatch loss over the epoch
    std::optional<double> val_loss;
};

// Minibatch Adam training in place. Throws NumericError (weights untouched by the failing step)
// when a loss or gradient turns non-finite.
std::vector<EpochStats> fit(model::GazeNet& net, std::span<const Example> train_set, std::span<const Example> val_set,
                            const TrainConfig& config,
                            const std::function<void(const EpochStats&)>& on_epoch = nullptr);

// Loss of the current weights over a set, batched.
double evaluate_loss(const model::GazeNet& net, std::span<const Example> set, const nn::LossConfig& loss);

// N x 2 raw outputs for a set.
std::vector<std::pair<double, double>> predict_all(const model::GazeNet& net, std::span<const Example> set);

}  // namespace eyetheia::train
