#include "eyetheia/model/gaze_net.hpp"

#include <array>

namespace eyetheia::model {

nn::Shape Sequential::output_shape(nn::Shape input) const {
    for (const auto& l : layers_) input = nn::output_shape(l.spec, input);
    return input;
}

template <typename T>
nn::BasicTensor<T> Sequential::forward(const nn::BasicParamSet<T>& params, nn::BasicTensor<T> x,
                                       std::vector<nn::ForwardContext<T>>* contexts) const {
    if (contexts) contexts->assign(layers_.size(), {});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        nn::LayerParams<T> lp;
        if (nn::has_parameters(l.spec)) lp = params.at(l.name).view();
        x = nn::forward<T>(l.spec, lp, x, contexts ? &(*contexts)[i] : nullptr);
    }
    return x;
}

template <typename T>
nn::BasicTensor<T> Sequential::backward(nn::BasicParamSet<T>& params,
                                        const std::vector<nn::ForwardContext<T>>& contexts,
                                        nn::BasicTensor<T> grad) const {
    if (contexts.size() != layers_.size()) throw ShapeError("Sequential::backward: context count mismatch");
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const auto& l = layers_[i];
        nn::LayerParams<T> lp;
        nn::LayerParameters<T>* target = nullptr;
        if (nn::has_parameters(l.spec)) {
            target = &params.at(l.name);
            lp = target->view();
        }
        auto g = nn::backward<T>(contexts[i], lp, grad);
        if (target) {
            for (std::size_t k = 0; k < g.grad_weights.size(); ++k) target->grad_weights[k] += g.grad_weights[k];
            for (std::size_t k = 0; k < g.grad_bias.size(); ++k) target->grad_bias[k] += g.grad_bias[k];
        }
        grad = std::move(g.input_grads.at(0));
    }
    return grad;
}

namespace {

std::vector<NamedLayer> conv_stack(const std::string& prefix, const std::vector<ConvLayerConfig>& convs,
                                   std::size_t in_channels) {
    std::vector<NamedLayer> layers;
    for (std::size_t i = 0; i < convs.size(); ++i) {
        const auto& c = convs[i];
        layers.push_back({prefix + ".conv" + std::to_string(i + 1),
                          nn::Conv2D{in_channels, c.out_channels, c.kernel, c.kernel, c.stride, c.padding}});
        layers.push_back({"", nn::ReLU{}});
        if (c.pool_after) layers.push_back({"", nn::MaxPool2D{2, 2}});
        in_channels = c.out_channels;
    }
    layers.push_back({"", nn::Flatten{}});
    return layers;
}

void append_fc_chain(std::vector<NamedLayer>& layers, const std::string& prefix, std::size_t in,
                     const std::vector<std::size_t>& widths, bool relu_last) {
    for (std::size_t i = 0; i < widths.size(); ++i) {
        layers.push_back({prefix + ".fc" + std::to_string(i + 1), nn::FullyConnected{in, widths[i]}});
        if (relu_last || i + 1 < widths.size()) layers.push_back({"", nn::ReLU{}});
        in = widths[i];
    }
}

template <typename T>
void register_params(nn::BasicParamSet<T>& params, const Sequential& seq) {
    for (const auto& l : seq.layers()) {
        if (nn::has_parameters(l.spec)) params.add(l.name, l.spec);
    }
}

struct Topology {
    Sequential eye, face, grid, eye_head, fusion;
};

Topology build_topology(const ModelConfig& config) {
    config.validate();
    Topology t;
    t.eye = Sequential(conv_stack("eye", config.eye_convs, 3));
    t.face = Sequential(conv_stack("face", config.face_convs, 3));

    const std::size_t eye_features = t.eye.output_shape({1, 3, config.eye_h, config.eye_w})[1];
    auto face_layers = t.face.layers();
    const std::size_t face_features = t.face.output_shape({1, 3, config.face_h, config.face_w})[1];
    append_fc_chain(face_layers, "face", face_features, config.face_fc, true);
    t.face = Sequential(std::move(face_layers));

    std::vector<NamedLayer> grid_layers;
    append_fc_chain(grid_layers, "grid", config.grid_size * config.grid_size, config.grid_fc, true);
    t.grid = Sequential(std::move(grid_layers));

    std::vector<NamedLayer> eye_head;
    eye_head.push_back({"eye.fc", nn::FullyConnected{2 * eye_features, config.eye_fc}});
    eye_head.push_back({"", nn::ReLU{}});
    t.eye_head = Sequential(std::move(eye_head));

    std::vector<NamedLayer> fusion;
    const std::size_t fused = config.eye_fc + config.face_fc.back() + config.grid_fc.back();
    append_fc_chain(fusion, "fusion", fused, {config.fusion_hidden, 2}, false);
    t.fusion = Sequential(std::move(fusion));
    return t;
}

}  // namespace

std::size_t parameter_count(const ModelConfig& config) {
    const Topology t = build_topology(config);
    std::size_t n = 0;
    for (const auto* seq : {&t.eye, &t.face, &t.grid, &t.eye_head, &t.fusion}) {
        for (const auto& l : seq->layers()) {
            if (nn::has_parameters(l.spec)) n += nn::shape_numel(nn::weight_shape(l.spec)) + nn::shape_numel(nn::bias_shape(l.spec));
        }
    }
    return n;
}

template <typename T>
BasicGazeNet<T>::BasicGazeNet(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    Topology t = build_topology(config);
    eye_branch_ = std::move(t.eye);
    face_branch_ = std::move(t.face);
    grid_branch_ = std::move(t.grid);
    eye_head_ = std::move(t.eye_head);
    fusion_head_ = std::move(t.fusion);
    for (const auto* seq : {&eye_branch_, &face_branch_, &grid_branch_, &eye_head_, &fusion_head_}) {
        register_params<T>(params_, *seq);
    }
    params_.init_kaiming_uniform(seed);
}

template <typename T>
nn::BasicTensor<T> BasicGazeNet<T>::forward(const BatchInput<T>& in, ForwardTrace<T>* trace) const {
    const std::size_t n = in.batch();
    if (in.left_eye.shape() != nn::Shape{n, 3, config_.eye_h, config_.eye_w} ||
        in.right_eye.shape() != in.left_eye.shape() ||
        in.face.shape() != nn::Shape{n, 3, config_.face_h, config_.face_w} ||
        in.face_grid.shape() != nn::Shape{n, config_.grid_size * config_.grid_size}) {
        throw ShapeError("gaze net input does not match the " + std::string(to_string(config_.profile)) +
                         " profile sizes");
    }
    auto left = eye_branch_.forward(params_, in.left_eye, trace ? &trace->left_eye : nullptr);
    auto right = eye_branch_.forward(params_, in.right_eye, trace ? &trace->right_eye : nullptr);
    const std::array<nn::BasicTensor<T>, 2> eyes{std::move(left), std::move(right)};
    auto eye_pair = nn::forward<T>(nn::Concat{}, {}, std::span<const nn::BasicTensor<T>>(eyes),
                                   trace ? &trace->eye_concat : nullptr);
    auto eye_embed = eye_head_.forward(params_, std::move(eye_pair), trace ? &trace->eye_head : nullptr);
    auto face_embed = face_branch_.forward(params_, in.face, trace ? &trace->face : nullptr);
    auto grid_embed = grid_branch_.forward(params_, in.face_grid, trace ? &trace->grid : nullptr);

    const std::array<nn::BasicTensor<T>, 3> parts{std::move(eye_embed), std::move(face_embed), std::move(grid_embed)};
    auto fused = nn::forward<T>(nn::Concat{}, {}, std::span<const nn::BasicTensor<T>>(parts),
                                trace ? &trace->fusion_concat : nullptr);
    return fusion_head_.forward(params_, std::move(fused), trace ? &trace->fusion : nullptr);
}

template <typename T>
void BasicGazeNet<T>::backward(const ForwardTrace<T>& trace, const nn::BasicTensor<T>& output_grad) {
    auto g_fused = fusion_head_.backward(params_, trace.fusion, output_grad);
    auto parts = nn::backward<T>(trace.fusion_concat, {}, g_fused).input_grads;
    grid_branch_.backward(params_, trace.grid, std::move(parts.at(2)));
    face_branch_.backward(params_, trace.face, std::move(parts.at(1)));
    auto g_pair = eye_head_.backward(params_, trace.eye_head, std::move(parts.at(0)));
    auto eyes = nn::backward<T>(trace.eye_concat, {}, g_pair).input_grads;
    // both eye passes accumulate into the same eye.conv* parameters
    eye_branch_.backward(params_, trace.right_eye, std::move(eyes.at(1)));
    eye_branch_.backward(params_, trace.left_eye, std::move(eyes.at(0)));
}

template <typename T>
std::pair<double, double> BasicGazeNet<T>::predict_raw(const InputBundle& bundle) const {
    check_bundle(bundle, config_);
    const auto batch = stack<T>(std::span<const InputBundle>(&bundle, 1), config_);
    const auto out = forward(batch);
    if (!out.all_finite()) throw NumericError("gaze net produced a non-finite output");
    return {static_cast<double>(out[0]), static_cast<double>(out[1])};
}

template <typename T>
GazePoint BasicGazeNet<T>::predict(const InputBundle& bundle) const {
    const auto [x, y] = predict_raw(bundle);
    GazePoint p{x, y, config_.output_space, std::nullopt, true};
    return clamp_to_space(p);
}

template <typename T>
std::uint64_t regime_signature(const ForwardTrace<T>& trace) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ull;
    };
    for (const auto* seq : {&trace.left_eye, &trace.right_eye, &trace.face, &trace.grid, &trace.eye_head, &trace.fusion}) {
        for (const auto& ctx : *seq) {
            if (std::holds_alternative<nn::ReLU>(ctx.spec)) {
                for (T v : ctx.input.data()) mix(v > T{0});
            } else if (std::holds_alternative<nn::MaxPool2D>(ctx.spec)) {
                for (std::size_t i : ctx.argmax) mix(i);
            }
        }
    }
    return h;
}

template std::uint64_t regime_signature<float>(const ForwardTrace<float>&);
template std::uint64_t regime_signature<double>(const ForwardTrace<double>&);

template class BasicGazeNet<float>;
template class BasicGazeNet<double>;
template nn::BasicTensor<float> Sequential::forward<float>(const nn::BasicParamSet<float>&, nn::BasicTensor<float>,
                                                           std::vector<nn::ForwardContext<float>>*) const;
template nn::BasicTensor<double> Sequential::forward<double>(const nn::BasicParamSet<double>&, nn::BasicTensor<double>,
                                                             std::vector<nn::ForwardContext<double>>*) const;
template nn::BasicTensor<float> Sequential::backward<float>(nn::BasicParamSet<float>&,
                                                            const std::vector<nn::ForwardContext<float>>&,
                                                            nn::BasicTensor<float>) const;
template nn::BasicTensor<double> Sequential::backward<double>(nn::BasicParamSet<double>&,
                                                              const std::vector<nn::ForwardContext<double>>&,
                                                              nn::BasicTensor<double>) const;

}  // namespace eyetheia::model
