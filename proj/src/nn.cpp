#include "insar/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace insar::nn {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::SeparableConv: return "separable_conv";
        case LayerKind::MaxPool3: return "maxpool3";
        case LayerKind::Upsample3: return "upsample3";
    }
    return "unknown";
}

std::string to_string(Activation act) {
    switch (act) {
        case Activation::None: return "none";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "unknown";
}

namespace {

bool has_weights(LayerKind kind) {
    return kind == LayerKind::Conv || kind == LayerKind::SeparableConv;
}

std::string layer_tag(std::size_t index) { return "layer " + std::to_string(index); }

}  // namespace

void validate(const NetworkSpec& spec) {
    if (spec.empty()) throw ShapeError("network spec has no layers");
    for (std::size_t l = 0; l < spec.size(); ++l) {
        const LayerSpec& layer = spec[l];
        if (layer.in_channels <= 0 || layer.out_channels <= 0)
            throw ShapeError(layer_tag(l) + ": channel counts must be positive");
        if (!has_weights(layer.kind)) {
            if (layer.in_channels != layer.out_channels)
                throw ShapeError(layer_tag(l) + ": pooling layers keep the channel count");
            if (layer.activation != Activation::None)
                throw ShapeError(layer_tag(l) + ": pooling layers take no activation");
        }
        if (l > 0 && spec[l - 1].out_channels != layer.in_channels)
            throw ShapeError(layer_tag(l) + ": expects " + std::to_string(layer.in_channels) +
                             " input channels, previous layer emits " +
                             std::to_string(spec[l - 1].out_channels));
    }
}

std::size_t parameter_count(const LayerSpec& layer) {
    const auto in = static_cast<std::size_t>(layer.in_channels);
    const auto out = static_cast<std::size_t>(layer.out_channels);
    switch (layer.kind) {
        case LayerKind::Conv: return out * in * 9 + out;
        case LayerKind::SeparableConv: return in * 9 + in * out + out;
        default: return 0;
    }
}

std::size_t parameter_count(const NetworkSpec& spec) {
    std::size_t n = 0;
    for (const auto& l : spec) n += parameter_count(l);
    return n;
}

Shape output_shape(const NetworkSpec& spec, Shape s) {
    validate(spec);
    for (std::size_t l = 0; l < spec.size(); ++l) {
        const LayerSpec& layer = spec[l];
        if (s.channels != layer.in_channels)
            throw ShapeError(layer_tag(l) + ": input has " + std::to_string(s.channels) +
                             " channels, layer expects " + std::to_string(layer.in_channels));
        if (s.height <= 0 || s.width <= 0) throw ShapeError(layer_tag(l) + ": empty input");
        switch (layer.kind) {
            case LayerKind::MaxPool3:
                if (s.height % 3 != 0 || s.width % 3 != 0)
                    throw ShapeError(layer_tag(l) + ": maxpool3 input " + std::to_string(s.height) +
                                     "x" + std::to_string(s.width) + " is not divisible by 3");
                s.height /= 3;
                s.width /= 3;
                break;
            case LayerKind::Upsample3:
                s.height *= 3;
                s.width *= 3;
                break;
            default:
                s.channels = layer.out_channels;
                break;
        }
    }
    return s;
}

template <typename Real>
Tensor<Real>::Tensor(int channels, int height, int width, Real fill)
    : shape_{channels, height, width} {
    if (channels < 0 || height < 0 || width < 0) throw ShapeError("negative tensor dimension");
    data_.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
                     static_cast<std::size_t>(width),
                 fill);
}

template <typename Real>
LayerParams<Real> zero_params(const LayerSpec& layer) {
    LayerParams<Real> p;
    const auto in = static_cast<std::size_t>(layer.in_channels);
    const auto out = static_cast<std::size_t>(layer.out_channels);
    if (layer.kind == LayerKind::Conv) {
        p.kernel.assign(out * in * 9, Real(0));
        p.bias.assign(out, Real(0));
    } else if (layer.kind == LayerKind::SeparableConv) {
        p.kernel.assign(in * 9, Real(0));
        p.pointwise.assign(out * in, Real(0));
        p.bias.assign(out, Real(0));
    }
    return p;
}

template <typename Real>
void check_consistent(const NetworkParams<Real>& params) {
    validate(params.spec);
    if (params.layers.size() != params.spec.size())
        throw ShapeError("parameter layer count does not match the spec");
    auto same = [](const LayerParams<Real>& a, const LayerParams<Real>& b) {
        return a.kernel.size() == b.kernel.size() && a.pointwise.size() == b.pointwise.size() &&
               a.bias.size() == b.bias.size();
    };
    for (std::size_t l = 0; l < params.spec.size(); ++l) {
        const auto ref = zero_params<Real>(params.spec[l]);
        if (!same(params.layers[l], ref)) throw ShapeError(layer_tag(l) + ": parameter shape mismatch");
        if (params.adam.step > 0) {
            if (params.adam.first_moment.size() != params.spec.size() ||
                params.adam.second_moment.size() != params.spec.size() ||
                !same(params.adam.first_moment[l], ref) || !same(params.adam.second_moment[l], ref))
                throw ShapeError(layer_tag(l) + ": Adam moment shape mismatch");
        }
    }
}

double xavier_limit(int fan_in, int fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename Real>
NetworkParams<Real> xavier_init(const NetworkSpec& spec, std::uint64_t seed) {
    validate(spec);
    NetworkParams<Real> params;
    params.spec = spec;
    std::mt19937_64 rng(seed);
    auto fill = [&rng](std::vector<Real>& v, double limit) {
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Real& w : v) w = static_cast<Real>(dist(rng));
    };
    for (const LayerSpec& layer : spec) {
        LayerParams<Real> p = zero_params<Real>(layer);
        if (layer.kind == LayerKind::Conv) {
            fill(p.kernel, xavier_limit(9 * layer.in_channels, 9 * layer.out_channels));
        } else if (layer.kind == LayerKind::SeparableConv) {
            fill(p.kernel, xavier_limit(9, 9));
            fill(p.pointwise, xavier_limit(layer.in_channels, layer.out_channels));
        }
        params.adam.first_moment.push_back(zero_params<Real>(layer));
        params.adam.second_moment.push_back(zero_params<Real>(layer));
        params.layers.push_back(std::move(p));
    }
    return params;
}

// --- kernels -----------------------------------------------------------------
//
// Every plane loop walks rows top to bottom and columns left to right with a
// contiguous inner loop, so results are reproducible bit for bit and the inner
// loops vectorize without reassociation.

namespace {

struct Span2D {
    int y0, y1, x0, x1;
};

// Output rows/cols for which (y + dy, x + dx) stays inside an h x w plane.
Span2D valid_range(int h, int w, int dy, int dx) {
    return {std::max(0, -dy), std::min(h, h - dy), std::max(0, -dx), std::min(w, w - dx)};
}

// out[y][x] += weight * in[y + dy][x + dx] over the valid region.
template <typename Real>
void shifted_axpy(const Real* in, Real* out, Real weight, int h, int w, int dy, int dx) {
    const Span2D r = valid_range(h, w, dy, dx);
    for (int y = r.y0; y < r.y1; ++y) {
        const Real* src = in + static_cast<std::ptrdiff_t>(y + dy) * w + dx;
        Real* dst = out + static_cast<std::ptrdiff_t>(y) * w;
        for (int x = r.x0; x < r.x1; ++x) dst[x] += weight * src[x];
    }
}

// sum over valid (y, x) of a[y][x] * b[y + dy][x + dx]. Products are summed
// column-wise into `lanes` first, then across columns.
template <typename Real>
Real shifted_dot(const Real* a, const Real* b, int h, int w, int dy, int dx, std::vector<Real>& lanes) {
    const Span2D r = valid_range(h, w, dy, dx);
    lanes.assign(static_cast<std::size_t>(w), Real(0));
    Real* acc = lanes.data();
    for (int y = r.y0; y < r.y1; ++y) {
        const Real* ra = a + static_cast<std::ptrdiff_t>(y) * w;
        const Real* rb = b + static_cast<std::ptrdiff_t>(y + dy) * w + dx;
        for (int x = r.x0; x < r.x1; ++x) acc[x] += ra[x] * rb[x];
    }
    Real total = 0;
    for (int x = 0; x < w; ++x) total += acc[x];
    return total;
}

template <typename Real>
Real plane_sum(const Real* a, int h, int w, std::vector<Real>& lanes) {
    lanes.assign(static_cast<std::size_t>(w), Real(0));
    Real* acc = lanes.data();
    for (int y = 0; y < h; ++y) {
        const Real* row = a + static_cast<std::ptrdiff_t>(y) * w;
        for (int x = 0; x < w; ++x) acc[x] += row[x];
    }
    Real total = 0;
    for (int x = 0; x < w; ++x) total += acc[x];
    return total;
}

template <typename Real>
void apply_activation(Tensor<Real>& t, Activation act) {
    auto& d = t.data();
    switch (act) {
        case Activation::None: break;
        case Activation::Relu:
            for (Real& v : d) v = v > Real(0) ? v : Real(0);
            break;
        case Activation::Sigmoid:
            for (Real& v : d) v = Real(1) / (Real(1) + std::exp(-v));
            break;
    }
}

// Multiplies the upstream gradient by the activation derivative, expressed
// through the stored post-activation output.
template <typename Real>
Tensor<Real> activation_backward(const Tensor<Real>& out, const Tensor<Real>& grad, Activation act) {
    Tensor<Real> g = grad;
    auto& gd = g.data();
    const auto& od = out.data();
    switch (act) {
        case Activation::None: break;
        case Activation::Relu:
            for (std::size_t i = 0; i < gd.size(); ++i)
                if (!(od[i] > Real(0))) gd[i] = Real(0);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= od[i] * (Real(1) - od[i]);
            break;
    }
    return g;
}

template <typename Real>
Tensor<Real> conv_forward(const LayerSpec& layer, const LayerParams<Real>& p, const Tensor<Real>& x) {
    const int h = x.height();
    const int w = x.width();
    Tensor<Real> y(layer.out_channels, h, w);
    for (int o = 0; o < layer.out_channels; ++o) {
        Real* dst = y.plane(o);
        std::fill(dst, dst + y.plane_size(), p.bias[static_cast<std::size_t>(o)]);
        for (int i = 0; i < layer.in_channels; ++i) {
            const Real* k = p.kernel.data() + (static_cast<std::size_t>(o) * layer.in_channels + i) * 9;
            for (int t = 0; t < 9; ++t) shifted_axpy(x.plane(i), dst, k[t], h, w, t / 3 - 1, t % 3 - 1);
        }
    }
    return y;
}

template <typename Real>
Tensor<Real> depthwise_forward(const LayerParams<Real>& p, const Tensor<Real>& x) {
    const int h = x.height();
    const int w = x.width();
    Tensor<Real> y(x.channels(), h, w);
    for (int c = 0; c < x.channels(); ++c) {
        const Real* k = p.kernel.data() + static_cast<std::size_t>(c) * 9;
        for (int t = 0; t < 9; ++t) shifted_axpy(x.plane(c), y.plane(c), k[t], h, w, t / 3 - 1, t % 3 - 1);
    }
    return y;
}

template <typename Real>
Tensor<Real> pointwise_forward(const LayerSpec& layer, const LayerParams<Real>& p, const Tensor<Real>& mid) {
    Tensor<Real> y(layer.out_channels, mid.height(), mid.width());
    const std::size_t n = mid.plane_size();
    for (int o = 0; o < layer.out_channels; ++o) {
        Real* dst = y.plane(o);
        std::fill(dst, dst + n, p.bias[static_cast<std::size_t>(o)]);
        for (int i = 0; i < layer.in_channels; ++i) {
            const Real wgt = p.pointwise[static_cast<std::size_t>(o) * layer.in_channels + i];
            const Real* src = mid.plane(i);
            for (std::size_t j = 0; j < n; ++j) dst[j] += wgt * src[j];
        }
    }
    return y;
}

template <typename Real>
Tensor<Real> maxpool_forward(const Tensor<Real>& x, std::vector<std::uint32_t>* argmax) {
    const int oh = x.height() / 3;
    const int ow = x.width() / 3;
    Tensor<Real> y(x.channels(), oh, ow);
    if (argmax) argmax->assign(y.size(), 0);
    std::size_t out_index = 0;
    for (int c = 0; c < x.channels(); ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox, ++out_index) {
                std::uint32_t best_pos = 0;
                Real best = x.at(c, 3 * oy, 3 * ox);
                for (int t = 1; t < 9; ++t) {
                    const Real v = x.at(c, 3 * oy + t / 3, 3 * ox + t % 3);
                    if (v > best) {
                        best = v;
                        best_pos = static_cast<std::uint32_t>(t);
                    }
                }
                y.data()[out_index] = best;
                if (argmax) (*argmax)[out_index] = best_pos;
            }
    return y;
}

template <typename Real>
Tensor<Real> upsample_forward(const Tensor<Real>& x) {
    const int w = x.width();
    Tensor<Real> y(x.channels(), x.height() * 3, w * 3);
    for (int c = 0; c < x.channels(); ++c)
        for (int yy = 0; yy < y.height(); ++yy) {
            const Real* src = x.plane(c) + static_cast<std::ptrdiff_t>(yy / 3) * w;
            Real* dst = y.plane(c) + static_cast<std::ptrdiff_t>(yy) * y.width();
            for (int xx = 0; xx < y.width(); ++xx) dst[xx] = src[xx / 3];
        }
    return y;
}

template <typename Real>
Tensor<Real> layer_forward(const LayerSpec& layer, const LayerParams<Real>& p, const Tensor<Real>& x,
                           Tensor<Real>* mid_out, std::vector<std::uint32_t>* argmax) {
    Tensor<Real> y;
    switch (layer.kind) {
        case LayerKind::Conv:
            y = conv_forward(layer, p, x);
            break;
        case LayerKind::SeparableConv: {
            Tensor<Real> mid = depthwise_forward(p, x);
            y = pointwise_forward(layer, p, mid);
            if (mid_out) *mid_out = std::move(mid);
            break;
        }
        case LayerKind::MaxPool3:
            y = maxpool_forward(x, argmax);
            break;
        case LayerKind::Upsample3:
            y = upsample_forward(x);
            break;
    }
    apply_activation(y, layer.activation);
    return y;
}

void check_input(const NetworkSpec& spec, Shape input) { (void)output_shape(spec, input); }

}  // namespace

template <typename Real>
ForwardResult<Real> forward(const NetworkParams<Real>& params, const Tensor<Real>& x) {
    check_consistent(params);
    check_input(params.spec, x.shape());
    const std::size_t n = params.spec.size();
    ForwardResult<Real> result;
    auto& cache = result.cache;
    cache.spec = params.spec;
    cache.inputs.resize(n);
    cache.mid.resize(n);
    cache.outputs.resize(n);
    cache.argmax.resize(n);
    const Tensor<Real>* current = &x;
    for (std::size_t l = 0; l < n; ++l) {
        cache.inputs[l] = *current;
        cache.outputs[l] = layer_forward(params.spec[l], params.layers[l], *current, &cache.mid[l],
                                         &cache.argmax[l]);
        current = &cache.outputs[l];
    }
    result.output = cache.outputs.back();
    return result;
}

template <typename Real>
Tensor<Real> predict(const NetworkParams<Real>& params, const Tensor<Real>& x) {
    check_consistent(params);
    check_input(params.spec, x.shape());
    Tensor<Real> current = x;
    for (std::size_t l = 0; l < params.spec.size(); ++l)
        current = layer_forward<Real>(params.spec[l], params.layers[l], current, nullptr, nullptr);
    return current;
}

template <typename Real>
Gradients<Real> zero_gradients(const NetworkSpec& spec) {
    Gradients<Real> g;
    for (const auto& layer : spec) g.layers.push_back(zero_params<Real>(layer));
    return g;
}

template <typename Real>
Gradients<Real> backward(const NetworkParams<Real>& params, const ForwardCache<Real>& cache,
                         const Tensor<Real>& dloss_dy) {
    check_consistent(params);
    const std::size_t n = params.spec.size();
    if (cache.spec != params.spec || cache.inputs.size() != n || cache.outputs.size() != n)
        throw ShapeError("backward: cache was produced by a different network");
    if (dloss_dy.shape() != cache.outputs.back().shape())
        throw ShapeError("backward: upstream gradient shape does not match network output");

    Gradients<Real> grads = zero_gradients<Real>(params.spec);
    std::vector<Real> lanes;
    Tensor<Real> upstream = dloss_dy;

    for (std::size_t l = n; l-- > 0;) {
        const LayerSpec& layer = params.spec[l];
        const LayerParams<Real>& p = params.layers[l];
        LayerParams<Real>& g = grads.layers[l];
        const Tensor<Real>& x = cache.inputs[l];
        const Tensor<Real> dpre = activation_backward(cache.outputs[l], upstream, layer.activation);
        const int h = x.height();
        const int w = x.width();
        Tensor<Real> dx(x.shape());

        switch (layer.kind) {
            case LayerKind::Conv:
                for (int o = 0; o < layer.out_channels; ++o) {
                    const Real* go = dpre.plane(o);
                    g.bias[static_cast<std::size_t>(o)] += plane_sum(go, h, w, lanes);
                    for (int i = 0; i < layer.in_channels; ++i) {
                        const std::size_t base = (static_cast<std::size_t>(o) * layer.in_channels + i) * 9;
                        for (int t = 0; t < 9; ++t) {
                            const int dy = t / 3 - 1;
                            const int dxs = t % 3 - 1;
                            g.kernel[base + t] += shifted_dot(go, x.plane(i), h, w, dy, dxs, lanes);
                            shifted_axpy(go, dx.plane(i), p.kernel[base + t], h, w, -dy, -dxs);
                        }
                    }
                }
                break;
            case LayerKind::SeparableConv: {
                const Tensor<Real>& mid = cache.mid[l];
                Tensor<Real> dmid(mid.shape());
                const std::size_t plane = mid.plane_size();
                for (int o = 0; o < layer.out_channels; ++o) {
                    const Real* go = dpre.plane(o);
                    g.bias[static_cast<std::size_t>(o)] += plane_sum(go, h, w, lanes);
                    for (int i = 0; i < layer.in_channels; ++i) {
                        const std::size_t idx = static_cast<std::size_t>(o) * layer.in_channels + i;
                        g.pointwise[idx] += shifted_dot(go, mid.plane(i), h, w, 0, 0, lanes);
                        const Real wgt = p.pointwise[idx];
                        Real* dm = dmid.plane(i);
                        for (std::size_t j = 0; j < plane; ++j) dm[j] += wgt * go[j];
                    }
                }
                for (int c = 0; c < layer.in_channels; ++c) {
                    const std::size_t base = static_cast<std::size_t>(c) * 9;
                    for (int t = 0; t < 9; ++t) {
                        const int dy = t / 3 - 1;
                        const int dxs = t % 3 - 1;
                        g.kernel[base + t] += shifted_dot(dmid.plane(c), x.plane(c), h, w, dy, dxs, lanes);
                        shifted_axpy(dmid.plane(c), dx.plane(c), p.kernel[base + t], h, w, -dy, -dxs);
                    }
                }
                break;
            }
            case LayerKind::MaxPool3: {
                const auto& arg = cache.argmax[l];
                const int oh = dpre.height();
                const int ow = dpre.width();
                std::size_t k = 0;
                for (int c = 0; c < dpre.channels(); ++c)
                    for (int oy = 0; oy < oh; ++oy)
                        for (int ox = 0; ox < ow; ++ox, ++k) {
                            const int t = static_cast<int>(arg[k]);
                            dx.at(c, 3 * oy + t / 3, 3 * ox + t % 3) += dpre.data()[k];
                        }
                break;
            }
            case LayerKind::Upsample3:
                for (int c = 0; c < dx.channels(); ++c)
                    for (int yy = 0; yy < dpre.height(); ++yy) {
                        const Real* src = dpre.plane(c) + static_cast<std::ptrdiff_t>(yy) * dpre.width();
                        Real* dst = dx.plane(c) + static_cast<std::ptrdiff_t>(yy / 3) * w;
                        for (int xx = 0; xx < dpre.width(); ++xx) dst[xx / 3] += src[xx];
                    }
                break;
        }
        upstream = std::move(dx);
    }
    grads.input = std::move(upstream);
    return grads;
}

template <typename Real>
void accumulate(std::vector<LayerParams<Real>>& accum, const std::vector<LayerParams<Real>>& g, Real scale) {
    if (accum.size() != g.size()) throw ShapeError("accumulate: layer count mismatch");
    auto add = [scale](std::vector<Real>& a, const std::vector<Real>& b) {
        if (a.size() != b.size()) throw ShapeError("accumulate: array size mismatch");
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
    };
    for (std::size_t l = 0; l < g.size(); ++l) {
        add(accum[l].kernel, g[l].kernel);
        add(accum[l].pointwise, g[l].pointwise);
        add(accum[l].bias, g[l].bias);
    }
}

template <typename Real>
Real loss(LossKind kind, const Tensor<Real>& y, const Tensor<Real>& target) {
    if (y.shape() != target.shape()) throw ShapeError("loss: prediction and target shapes differ");
    if (y.size() == 0) throw ShapeError("loss: empty tensors");
    const auto& yd = y.data();
    const auto& td = target.data();
    double total = 0.0;
    if (kind == LossKind::MeanSquaredError) {
        for (std::size_t i = 0; i < yd.size(); ++i) {
            const double d = static_cast<double>(yd[i]) - static_cast<double>(td[i]);
            total += d * d;
        }
    } else {
        for (std::size_t i = 0; i < yd.size(); ++i) {
            const double p = std::clamp(static_cast<double>(yd[i]), kBceEpsilon, 1.0 - kBceEpsilon);
            const double t = td[i];
            total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
        }
    }
    return static_cast<Real>(total / static_cast<double>(yd.size()));
}

template <typename Real>
Tensor<Real> loss_gradient(LossKind kind, const Tensor<Real>& y, const Tensor<Real>& target) {
    if (y.shape() != target.shape()) throw ShapeError("loss_gradient: prediction and target shapes differ");
    Tensor<Real> g(y.shape());
    const auto& yd = y.data();
    const auto& td = target.data();
    auto& gd = g.data();
    const double inv_n = 1.0 / static_cast<double>(yd.size());
    for (std::size_t i = 0; i < yd.size(); ++i) {
        const double yv = yd[i];
        const double t = td[i];
        double d;
        if (kind == LossKind::MeanSquaredError) {
            d = 2.0 * (yv - t);
        } else {
            const double p = std::clamp(yv, kBceEpsilon, 1.0 - kBceEpsilon);
            d = (p - t) / (p * (1.0 - p));
        }
        gd[i] = static_cast<Real>(d * inv_n);
    }
    return g;
}

template <typename Real>
BatchGradient<Real> batch_gradient(const NetworkParams<Real>& params, std::span<const Tensor<Real>> inputs,
                                   std::span<const Tensor<Real>> targets, LossKind kind) {
    if (inputs.empty()) throw ShapeError("batch_gradient: empty batch");
    if (inputs.size() != targets.size()) throw ShapeError("batch_gradient: input and target counts differ");
    BatchGradient<Real> out{0.0, zero_gradients<Real>(params.spec).layers};
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto fwd = forward(params, inputs[i]);
        out.loss += static_cast<double>(loss(kind, fwd.output, targets[i]));
        const auto g = backward(params, fwd.cache, loss_gradient(kind, fwd.output, targets[i]));
        accumulate(out.layers, g.layers);
    }
    const Real inv = Real(1) / static_cast<Real>(inputs.size());
    for (auto& layer : out.layers) {
        for (Real& v : layer.kernel) v *= inv;
        for (Real& v : layer.pointwise) v *= inv;
        for (Real& v : layer.bias) v *= inv;
    }
    out.loss /= static_cast<double>(inputs.size());
    return out;
}

template <typename Real>
void adam_step(NetworkParams<Real>& params, const std::vector<LayerParams<Real>>& gradients, double lr,
               const AdamConfig& cfg) {
    if (gradients.size() != params.layers.size()) throw ShapeError("adam_step: gradient layer count mismatch");
    auto& adam = params.adam;
    if (adam.first_moment.size() != params.layers.size()) {
        adam.first_moment.clear();
        adam.second_moment.clear();
        for (const auto& layer : params.spec) {
            adam.first_moment.push_back(zero_params<Real>(layer));
            adam.second_moment.push_back(zero_params<Real>(layer));
        }
    }
    adam.step += 1;
    const double t = static_cast<double>(adam.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    const Real b1 = static_cast<Real>(cfg.beta1);
    const Real b2 = static_cast<Real>(cfg.beta2);

    auto update = [&](std::vector<Real>& w, const std::vector<Real>& g, std::vector<Real>& m,
                      std::vector<Real>& v) {
        if (w.size() != g.size()) throw ShapeError("adam_step: gradient array size mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (Real(1) - b1) * g[i];
            v[i] = b2 * v[i] + (Real(1) - b2) * g[i] * g[i];
            const double m_hat = static_cast<double>(m[i]) / correction1;
            const double v_hat = static_cast<double>(v[i]) / correction2;
            w[i] = static_cast<Real>(static_cast<double>(w[i]) - lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& p = params.layers[l];
        const auto& g = gradients[l];
        update(p.kernel, g.kernel, adam.first_moment[l].kernel, adam.second_moment[l].kernel);
        update(p.pointwise, g.pointwise, adam.first_moment[l].pointwise, adam.second_moment[l].pointwise);
        update(p.bias, g.bias, adam.first_moment[l].bias, adam.second_moment[l].bias);
    }
}

template <typename Real>
std::size_t parameter_count(const NetworkParams<Real>& params) {
    std::size_t n = 0;
    for (const auto& p : params.layers) n += p.kernel.size() + p.pointwise.size() + p.bias.size();
    return n;
}

#define INSAR_NN_INSTANTIATE(Real)                                                                    \
    template class Tensor<Real>;                                                                      \
    template LayerParams<Real> zero_params<Real>(const LayerSpec&);                                   \
    template void check_consistent<Real>(const NetworkParams<Real>&);                                 \
    template NetworkParams<Real> xavier_init<Real>(const NetworkSpec&, std::uint64_t);                \
    template ForwardResult<Real> forward<Real>(const NetworkParams<Real>&, const Tensor<Real>&);      \
    template Tensor<Real> predict<Real>(const NetworkParams<Real>&, const Tensor<Real>&);             \
    template Gradients<Real> zero_gradients<Real>(const NetworkSpec&);                                \
    template Gradients<Real> backward<Real>(const NetworkParams<Real>&, const ForwardCache<Real>&,    \
                                            const Tensor<Real>&);                                     \
    template void accumulate<Real>(std::vector<LayerParams<Real>>&,                                   \
                                   const std::vector<LayerParams<Real>>&, Real);                      \
    template Real loss<Real>(LossKind, const Tensor<Real>&, const Tensor<Real>&);                     \
    template Tensor<Real> loss_gradient<Real>(LossKind, const Tensor<Real>&, const Tensor<Real>&);    \
    template BatchGradient<Real> batch_gradient<Real>(const NetworkParams<Real>&,                    \
                                                      std::span<const Tensor<Real>>,                  \
                                                      std::span<const Tensor<Real>>, LossKind);       \
    template void adam_step<Real>(NetworkParams<Real>&, const std::vector<LayerParams<Real>>&,        \
                                  double, const AdamConfig&);                                         \
    template std::size_t parameter_count<Real>(const NetworkParams<Real>&);

INSAR_NN_INSTANTIATE(float)
INSAR_NN_INSTANTIATE(double)

#undef INSAR_NN_INSTANTIATE

}  // namespace insar::nn
