#include "eyetheia/nn/layers.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace eyetheia::nn {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

void require_single(const std::string& kind, std::span<const Shape> inputs) {
    if (inputs.size() != 1) {
        throw ShapeError(kind + " expects exactly one input, got " + std::to_string(inputs.size()));
    }
}

[[noreturn]] void shape_fail(const std::string& kind, const Shape& got, const std::string& expected) {
    throw ShapeError(kind + ": input shape " + shape_str(got) + " incompatible, expected " + expected);
}

}  // namespace

std::string layer_kind_name(const LayerSpec& spec) {
    return std::visit(overloaded{
                          [](const Conv2D&) { return std::string("Conv2D"); },
                          [](const MaxPool2D&) { return std::string("MaxPool2D"); },
                          [](const ReLU&) { return std::string("ReLU"); },
                          [](const FullyConnected&) { return std::string("FullyConnected"); },
                          [](const Concat&) { return std::string("Concat"); },
                          [](const Flatten&) { return std::string("Flatten"); },
                      },
                      spec);
}

Shape output_shape(const LayerSpec& spec, std::span<const Shape> inputs) {
    const std::string kind = layer_kind_name(spec);
    return std::visit(
        overloaded{
            [&](const Conv2D& c) -> Shape {
                require_single(kind, inputs);
                const Shape& s = inputs[0];
                if (c.stride == 0 || c.kernel_h == 0 || c.kernel_w == 0 || c.in_channels == 0 ||
                    c.out_channels == 0) {
                    throw ShapeError("Conv2D: invalid spec (zero kernel, stride or channels)");
                }
                if (s.size() != 4 || s[1] != c.in_channels) {
                    shape_fail(kind, s, "N x " + std::to_string(c.in_channels) + " x H x W");
                }
                if (s[2] + 2 * c.padding < c.kernel_h || s[3] + 2 * c.padding < c.kernel_w) {
                    shape_fail(kind, s, "spatial size >= kernel");
                }
                return {s[0], c.out_channels, conv_out_dim(s[2], c.kernel_h, c.stride, c.padding),
                        conv_out_dim(s[3], c.kernel_w, c.stride, c.padding)};
            },
            [&](const MaxPool2D& p) -> Shape {
                require_single(kind, inputs);
                const Shape& s = inputs[0];
                if (p.window == 0 || p.stride == 0) throw ShapeError("MaxPool2D: zero window or stride");
                if (s.size() != 4 || s[2] < p.window || s[3] < p.window) {
                    shape_fail(kind, s, "N x C x H x W with H, W >= " + std::to_string(p.window));
                }
                return {s[0], s[1], (s[2] - p.window) / p.stride + 1, (s[3] - p.window) / p.stride + 1};
            },
            [&](const ReLU&) -> Shape {
                require_single(kind, inputs);
                return inputs[0];
            },
            [&](const FullyConnected& f) -> Shape {
                require_single(kind, inputs);
                const Shape& s = inputs[0];
                if (f.in_features == 0 || f.out_features == 0) throw ShapeError("FullyConnected: zero features");
                if (s.size() != 2 || s[1] != f.in_features) {
                    shape_fail(kind, s, "N x " + std::to_string(f.in_features));
                }
                return {s[0], f.out_features};
            },
            [&](const Concat&) -> Shape {
                if (inputs.empty()) throw ShapeError("Concat: no inputs");
                std::size_t batch = inputs[0].empty() ? 0 : inputs[0][0];
                std::size_t total = 0;
                for (const Shape& s : inputs) {
                    if (s.size() != 2 || s[0] != batch) shape_fail(kind, s, "N x F with common N");
                    total += s[1];
                }
                return {batch, total};
            },
            [&](const Flatten&) -> Shape {
                require_single(kind, inputs);
                const Shape& s = inputs[0];
                if (s.size() < 2) shape_fail(kind, s, "rank >= 2");
                return {s[0], shape_numel(s) / s[0]};
            },
        },
        spec);
}

Shape output_shape(const LayerSpec& spec, const Shape& input) {
    return output_shape(spec, std::span<const Shape>(&input, 1));
}

bool has_parameters(const LayerSpec& spec) {
    return std::holds_alternative<Conv2D>(spec) || std::holds_alternative<FullyConnected>(spec);
}

Shape weight_shape(const LayerSpec& spec) {
    if (const auto* c = std::get_if<Conv2D>(&spec)) {
        return {c->out_channels, c->in_channels, c->kernel_h, c->kernel_w};
    }
    if (const auto* f = std::get_if<FullyConnected>(&spec)) return {f->out_features, f->in_features};
    return {};
}

Shape bias_shape(const LayerSpec& spec) {
    if (const auto* c = std::get_if<Conv2D>(&spec)) return {c->out_channels};
    if (const auto* f = std::get_if<FullyConnected>(&spec)) return {f->out_features};
    return {};
}

std::size_t fan_in(const LayerSpec& spec) {
    if (const auto* c = std::get_if<Conv2D>(&spec)) return c->in_channels * c->kernel_h * c->kernel_w;
    if (const auto* f = std::get_if<FullyConnected>(&spec)) return f->in_features;
    return 0;
}

template <typename T>
void gemm(bool transpose_a, bool transpose_b, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c, bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, T{0});
    if (!transpose_a && !transpose_b) {
        for (std::size_t i = 0; i < m; ++i) {
            T* crow = c + i * n;
            for (std::size_t p = 0; p < k; ++p) {
                const T av = a[i * k + p];
                if (av == T{0}) continue;
                const T* brow = b + p * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (!transpose_a && transpose_b) {
        for (std::size_t i = 0; i < m; ++i) {
            const T* arow = a + i * k;
            for (std::size_t j = 0; j < n; ++j) {
                const T* brow = b + j * k;
                T acc{0};
                for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
                c[i * n + j] += acc;
            }
        }
    } else if (transpose_a && !transpose_b) {
        for (std::size_t p = 0; p < k; ++p) {
            const T* arow = a + p * m;
            const T* brow = b + p * n;
            for (std::size_t i = 0; i < m; ++i) {
                const T av = arow[i];
                if (av == T{0}) continue;
                T* crow = c + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                T acc{0};
                for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[j * k + p];
                c[i * n + j] += acc;
            }
        }
    }
}

namespace {

struct ConvGeometry {
    std::size_t channels, height, width, out_h, out_w, kh, kw, stride, pad;
    std::size_t patch() const { return channels * kh * kw; }
    std::size_t positions() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Conv2D& c, const Shape& in) {
    return {in[1], in[2], in[3], conv_out_dim(in[2], c.kernel_h, c.stride, c.padding),
            conv_out_dim(in[3], c.kernel_w, c.stride, c.padding), c.kernel_h, c.kernel_w, c.stride, c.padding};
}

// cols: patch() x positions(), one sample.
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
    for (std::size_t ch = 0; ch < g.channels; ++ch) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                T* row = cols + ((ch * g.kh + ky) * g.kw + kx) * g.positions();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
                        T v{0};
                        if (iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                            ix < static_cast<long>(g.width)) {
                            v = image[(ch * g.height + iy) * g.width + ix];
                        }
                        row[oy * g.out_w + ox] = v;
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* cols, T* image) {
    for (std::size_t ch = 0; ch < g.channels; ++ch) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const T* row = cols + ((ch * g.kh + ky) * g.kw + kx) * g.positions();
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
                    if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
                        if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                        image[(ch * g.height + iy) * g.width + ix] += row[oy * g.out_w + ox];
                    }
                }
            }
        }
    }
}

template <typename T>
void require_params(const std::string& kind, const LayerSpec& spec, const LayerParams<T>& params) {
    if (!params.weights || !params.bias) throw ShapeError(kind + ": missing parameters");
    if (params.weights->shape() != weight_shape(spec)) {
        throw ShapeError(kind + ": weight shape " + shape_str(params.weights->shape()) + " expected " +
                         shape_str(weight_shape(spec)));
    }
    if (params.bias->shape() != bias_shape(spec)) {
        throw ShapeError(kind + ": bias shape " + shape_str(params.bias->shape()) + " expected " +
                         shape_str(bias_shape(spec)));
    }
}

template <typename T>
BasicTensor<T> conv_forward_direct(const Conv2D& c, const BasicTensor<T>& w, const BasicTensor<T>& b,
                                   const BasicTensor<T>& in, const Shape& out_shape) {
    BasicTensor<T> out(out_shape);
    const auto g = conv_geometry(c, in.shape());
    for (std::size_t n = 0; n < in.dim(0); ++n) {
        for (std::size_t oc = 0; oc < c.out_channels; ++oc) {
            for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                    T acc = b[oc];
                    for (std::size_t ic = 0; ic < g.channels; ++ic) {
                        for (std::size_t ky = 0; ky < g.kh; ++ky) {
                            const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
                            if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                                const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
                                if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                                acc += w.at(oc, ic, ky, kx) * in.at(n, ic, iy, ix);
                            }
                        }
                    }
                    out.at(n, oc, oy, ox) = acc;
                }
            }
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> conv_forward_im2col(const Conv2D& c, const BasicTensor<T>& w, const BasicTensor<T>& b,
                                   const BasicTensor<T>& in, const Shape& out_shape) {
    BasicTensor<T> out(out_shape);
    const auto g = conv_geometry(c, in.shape());
    std::vector<T> cols(g.patch() * g.positions());
    const std::size_t in_stride = g.channels * g.height * g.width;
    const std::size_t out_stride = c.out_channels * g.positions();
    for (std::size_t n = 0; n < in.dim(0); ++n) {
        im2col(g, in.raw() + n * in_stride, cols.data());
        T* dst = out.raw() + n * out_stride;
        for (std::size_t oc = 0; oc < c.out_channels; ++oc) {
            std::fill(dst + oc * g.positions(), dst + (oc + 1) * g.positions(), b[oc]);
        }
        gemm<T>(false, false, c.out_channels, g.positions(), g.patch(), w.raw(), cols.data(), dst, true);
    }
    return out;
}

}  // namespace

template <typename T>
BasicTensor<T> forward(const LayerSpec& spec, const LayerParams<T>& params, std::span<const BasicTensor<T>> inputs,
                       ForwardContext<T>* ctx, ConvAlgorithm algorithm) {
    std::vector<Shape> shapes;
    shapes.reserve(inputs.size());
    for (const auto& t : inputs) shapes.push_back(t.shape());
    const Shape out_shape = output_shape(spec, shapes);
    const std::string kind = layer_kind_name(spec);

    if (ctx) {
        ctx->spec = spec;
        ctx->input_shapes = shapes;
        ctx->input = BasicTensor<T>();
        ctx->argmax.clear();
        ctx->ready = true;
    }

    return std::visit(
        overloaded{
            [&](const Conv2D& c) {
                require_params(kind, spec, params);
                if (ctx) ctx->input = inputs[0];
                if (algorithm == ConvAlgorithm::Direct) {
                    return conv_forward_direct(c, *params.weights, *params.bias, inputs[0], out_shape);
                }
                return conv_forward_im2col(c, *params.weights, *params.bias, inputs[0], out_shape);
            },
            [&](const MaxPool2D& p) {
                const auto& in = inputs[0];
                BasicTensor<T> out(out_shape);
                if (ctx) ctx->argmax.resize(out.size());
                const std::size_t h = in.dim(2), w = in.dim(3);
                const std::size_t oh = out_shape[2], ow = out_shape[3];
                std::size_t o = 0;
                for (std::size_t nc = 0; nc < in.dim(0) * in.dim(1); ++nc) {
                    const std::size_t base = nc * h * w;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
                            std::size_t best = base + (oy * p.stride) * w + ox * p.stride;
                            for (std::size_t ky = 0; ky < p.window; ++ky) {
                                for (std::size_t kx = 0; kx < p.window; ++kx) {
                                    const std::size_t idx = base + (oy * p.stride + ky) * w + ox * p.stride + kx;
                                    if (in[idx] > in[best]) best = idx;
                                }
                            }
                            out[o] = in[best];
                            if (ctx) ctx->argmax[o] = best;
                        }
                    }
                }
                return out;
            },
            [&](const ReLU&) {
                const auto& in = inputs[0];
                if (ctx) ctx->input = in;
                BasicTensor<T> out(out_shape);
                for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
                return out;
            },
            [&](const FullyConnected& f) {
                require_params(kind, spec, params);
                const auto& in = inputs[0];
                if (ctx) ctx->input = in;
                const std::size_t batch = in.dim(0);
                BasicTensor<T> out(out_shape);
                for (std::size_t n = 0; n < batch; ++n) {
                    std::copy(params.bias->raw(), params.bias->raw() + f.out_features,
                              out.raw() + n * f.out_features);
                }
                gemm<T>(false, true, batch, f.out_features, f.in_features, in.raw(), params.weights->raw(),
                        out.raw(), true);
                return out;
            },
            [&](const Concat&) {
                BasicTensor<T> out(out_shape);
                const std::size_t batch = out_shape[0], total = out_shape[1];
                std::size_t offset = 0;
                for (const auto& t : inputs) {
                    const std::size_t f = t.dim(1);
                    for (std::size_t n = 0; n < batch; ++n) {
                        std::copy(t.raw() + n * f, t.raw() + (n + 1) * f, out.raw() + n * total + offset);
                    }
                    offset += f;
                }
                return out;
            },
            [&](const Flatten&) { return inputs[0].reshaped(out_shape); },
        },
        spec);
}

template <typename T>
LayerGradients<T> backward(const ForwardContext<T>& ctx, const LayerParams<T>& params,
                           const BasicTensor<T>& upstream_grad) {
    if (!ctx.ready) throw ShapeError("backward: missing forward context");
    const Shape out_shape = output_shape(ctx.spec, ctx.input_shapes);
    if (upstream_grad.shape() != out_shape) {
        throw ShapeError("backward " + layer_kind_name(ctx.spec) + ": upstream grad shape " +
                         shape_str(upstream_grad.shape()) + " expected " + shape_str(out_shape));
    }
    const std::string kind = layer_kind_name(ctx.spec);
    LayerGradients<T> result;

    std::visit(
        overloaded{
            [&](const Conv2D& c) {
                require_params(kind, ctx.spec, params);
                if (ctx.input.shape() != ctx.input_shapes[0]) throw ShapeError("Conv2D backward: stale context");
                const auto g = conv_geometry(c, ctx.input.shape());
                BasicTensor<T> dx(ctx.input.shape());
                BasicTensor<T> dw(weight_shape(ctx.spec));
                BasicTensor<T> db(bias_shape(ctx.spec));
                std::vector<T> cols(g.patch() * g.positions());
                std::vector<T> dcols(g.patch() * g.positions());
                const std::size_t in_stride = g.channels * g.height * g.width;
                const std::size_t out_stride = c.out_channels * g.positions();
                for (std::size_t n = 0; n < ctx.input.dim(0); ++n) {
                    const T* dout = upstream_grad.raw() + n * out_stride;
                    for (std::size_t oc = 0; oc < c.out_channels; ++oc) {
                        T acc{0};
                        for (std::size_t p = 0; p < g.positions(); ++p) acc += dout[oc * g.positions() + p];
                        db[oc] += acc;
                    }
                    im2col(g, ctx.input.raw() + n * in_stride, cols.data());
                    // dW (out x patch) += dOut (out x P) * cols^T
                    gemm<T>(false, true, c.out_channels, g.patch(), g.positions(), dout, cols.data(), dw.raw(), true);
                    // dcols (patch x P) = W^T * dOut
                    gemm<T>(true, false, g.patch(), g.positions(), c.out_channels, params.weights->raw(), dout,
                            dcols.data(), false);
                    col2im_add(g, dcols.data(), dx.raw() + n * in_stride);
                }
                result.input_grads.push_back(std::move(dx));
                result.grad_weights = std::move(dw);
                result.grad_bias = std::move(db);
            },
            [&](const MaxPool2D&) {
                if (ctx.argmax.size() != upstream_grad.size()) throw ShapeError("MaxPool2D backward: stale context");
                BasicTensor<T> dx(ctx.input_shapes[0]);
                for (std::size_t o = 0; o < upstream_grad.size(); ++o) dx[ctx.argmax[o]] += upstream_grad[o];
                result.input_grads.push_back(std::move(dx));
            },
            [&](const ReLU&) {
                if (ctx.input.shape() != ctx.input_shapes[0]) throw ShapeError("ReLU backward: stale context");
                BasicTensor<T> dx(ctx.input.shape());
                for (std::size_t i = 0; i < dx.size(); ++i) {
                    dx[i] = ctx.input[i] > T{0} ? upstream_grad[i] : T{0};
                }
                result.input_grads.push_back(std::move(dx));
            },
            [&](const FullyConnected& f) {
                require_params(kind, ctx.spec, params);
                if (ctx.input.shape() != ctx.input_shapes[0]) {
                    throw ShapeError("FullyConnected backward: stale context");
                }
                const std::size_t batch = ctx.input.dim(0);
                BasicTensor<T> dx(ctx.input.shape());
                BasicTensor<T> dw(weight_shape(ctx.spec));
                BasicTensor<T> db(bias_shape(ctx.spec));
                for (std::size_t n = 0; n < batch; ++n) {
                    for (std::size_t o = 0; o < f.out_features; ++o) db[o] += upstream_grad[n * f.out_features + o];
                }
                // dW (out x in) = dY^T (out x N) * X (N x in)
                gemm<T>(true, false, f.out_features, f.in_features, batch, upstream_grad.raw(), ctx.input.raw(),
                        dw.raw(), false);
                // dX (N x in) = dY (N x out) * W (out x in)
                gemm<T>(false, false, batch, f.in_features, f.out_features, upstream_grad.raw(),
                        params.weights->raw(), dx.raw(), false);
                result.input_grads.push_back(std::move(dx));
                result.grad_weights = std::move(dw);
                result.grad_bias = std::move(db);
            },
            [&](const Concat&) {
                const std::size_t batch = out_shape[0], total = out_shape[1];
                std::size_t offset = 0;
                for (const Shape& s : ctx.input_shapes) {
                    BasicTensor<T> dx(s);
                    const std::size_t f = s[1];
                    for (std::size_t n = 0; n < batch; ++n) {
                        std::copy(upstream_grad.raw() + n * total + offset,
                                  upstream_grad.raw() + n * total + offset + f, dx.raw() + n * f);
                    }
                    offset += f;
                    result.input_grads.push_back(std::move(dx));
                }
            },
            [&](const Flatten&) { result.input_grads.push_back(upstream_grad.reshaped(ctx.input_shapes[0])); },
        },
        ctx.spec);
    return result;
}

#define EYETHEIA_INSTANTIATE_LAYERS(T)                                                                          \
    template BasicTensor<T> forward<T>(const LayerSpec&, const LayerParams<T>&, std::span<const BasicTensor<T>>, \
                                       ForwardContext<T>*, ConvAlgorithm);                                       \
    template LayerGradients<T> backward<T>(const ForwardContext<T>&, const LayerParams<T>&,                     \
                                           const BasicTensor<T>&);                                               \
    template void gemm<T>(bool, bool, std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);

EYETHEIA_INSTANTIATE_LAYERS(float)
EYETHEIA_INSTANTIATE_LAYERS(double)

}  // namespace eyetheia::nn
