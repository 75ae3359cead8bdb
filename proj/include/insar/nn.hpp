#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "insar/error.hpp"

// Small deterministic CNN engine: 3x3 same-size convolutions (plain and
// depthwise-separable), 3x3 max pooling, x3 nearest-neighbour upsampling,
// BCE/MSE losses, Xavier init and Adam.
namespace insar::nn {

enum class LayerKind : std::uint8_t { Conv = 0, SeparableConv = 1, MaxPool3 = 2, Upsample3 = 3 };
enum class Activation : std::uint8_t { None = 0, Relu = 1, Sigmoid = 2 };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int in_channels = 0;
    int out_channels = 0;
    Activation activation = Activation::None;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using NetworkSpec = std::vector<LayerSpec>;

inline LayerSpec conv3x3(int in, int out, Activation act) {
    return {LayerKind::Conv, in, out, act};
}
inline LayerSpec separable3x3(int in, int out, Activation act) {
    return {LayerKind::SeparableConv, in, out, act};
}
inline LayerSpec maxpool3(int channels) { return {LayerKind::MaxPool3, channels, channels, Activation::None}; }
inline LayerSpec upsample3(int channels) { return {LayerKind::Upsample3, channels, channels, Activation::None}; }

/// Throws ShapeError on channel mismatches between consecutive layers or
/// on pool/upsample layers that change channel count or carry activations.
void validate(const NetworkSpec& spec);

/// Trainable scalars in one layer (kernel + pointwise + bias).
std::size_t parameter_count(const LayerSpec& layer);
std::size_t parameter_count(const NetworkSpec& spec);

struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;
    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Output shape computed from the spec alone. Throws ShapeError when the
/// input does not fit (channel mismatch, pooling on a non-multiple of 3).
Shape output_shape(const NetworkSpec& spec, Shape input);

template <typename Real>
class Tensor {
public:
    Tensor() = default;
    Tensor(int channels, int height, int width, Real fill = Real(0));
    explicit Tensor(Shape s, Real fill = Real(0)) : Tensor(s.channels, s.height, s.width, fill) {}

    int channels() const { return shape_.channels; }
    int height() const { return shape_.height; }
    int width() const { return shape_.width; }
    Shape shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t plane_size() const {
        return static_cast<std::size_t>(shape_.height) * static_cast<std::size_t>(shape_.width);
    }

    Real* plane(int c) { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }
    const Real* plane(int c) const { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }

    Real& at(int c, int y, int x) {
        return plane(c)[static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
                        static_cast<std::size_t>(x)];
    }
    Real at(int c, int y, int x) const {
        return plane(c)[static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
                        static_cast<std::size_t>(x)];
    }

    std::vector<Real>& data() { return data_; }
    const std::vector<Real>& data() const { return data_; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_{};
    std::vector<Real> data_;
};

/// Trainable arrays of one layer. Layout:
///   Conv:          kernel[out][in][3][3], bias[out]
///   SeparableConv: kernel[in][3][3] (depthwise), pointwise[out][in], bias[out]
///   pooling kinds: all empty
template <typename Real>
struct LayerParams {
    std::vector<Real> kernel;
    std::vector<Real> pointwise;
    std::vector<Real> bias;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <typename Real>
LayerParams<Real> zero_params(const LayerSpec& layer);

template <typename Real>
struct AdamState {
    std::vector<LayerParams<Real>> first_moment;
    std::vector<LayerParams<Real>> second_moment;
    std::uint64_t step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename Real>
struct NetworkParams {
    NetworkSpec spec;
    std::vector<LayerParams<Real>> layers;
    AdamState<Real> adam;
    double learning_rate = 1e-3;

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Throws ShapeError if any array does not match the spec.
template <typename Real>
void check_consistent(const NetworkParams<Real>& params);

/// Uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases. Conv:
/// fan_in = 9*in, fan_out = 9*out. Depthwise kernels: 9 and 9. Pointwise:
/// in and out. Deterministic for a given seed.
template <typename Real>
NetworkParams<Real> xavier_init(const NetworkSpec& spec, std::uint64_t seed);

/// Bound used by xavier_init for one array.
double xavier_limit(int fan_in, int fan_out);

template <typename Real>
struct ForwardCache {
    // inputs[l] is the input of layer l; outputs[l] its post-activation
    // output. mid[l] holds the depthwise result of separable layers.
    std::vector<Tensor<Real>> inputs;
    std::vector<Tensor<Real>> mid;
    std::vector<Tensor<Real>> outputs;
    std::vector<std::vector<std::uint32_t>> argmax;
    NetworkSpec spec;
};

template <typename Real>
struct ForwardResult {
    Tensor<Real> output;
    ForwardCache<Real> cache;
};

template <typename Real>
ForwardResult<Real> forward(const NetworkParams<Real>& params, const Tensor<Real>& x);

/// forward() without retaining intermediates.
template <typename Real>
Tensor<Real> predict(const NetworkParams<Real>& params, const Tensor<Real>& x);

template <typename Real>
struct Gradients {
    std::vector<LayerParams<Real>> layers;
    Tensor<Real> input;
};

template <typename Real>
Gradients<Real> zero_gradients(const NetworkSpec& spec);

/// Backpropagates dloss/doutput through a cached forward pass. Max pooling
/// routes to the first maximal element of each block; upsampling sums the
/// replicated 3x3 block. Throws ShapeError if the cache does not belong to
/// this network or dloss_dy has the wrong shape.
template <typename Real>
Gradients<Real> backward(const NetworkParams<Real>& params, const ForwardCache<Real>& cache,
                         const Tensor<Real>& dloss_dy);

/// accum += scale * g, array by array.
template <typename Real>
void accumulate(std::vector<LayerParams<Real>>& accum, const std::vector<LayerParams<Real>>& g,
                Real scale = Real(1));

enum class LossKind { BinaryCrossEntropy, MeanSquaredError };

inline constexpr double kBceEpsilon = 1e-7;

/// Mean over all elements. BCE clamps predictions to [1e-7, 1 - 1e-7].
template <typename Real>
Real loss(LossKind kind, const Tensor<Real>& y, const Tensor<Real>& target);

/// Derivative of loss() w.r.t. y. For BCE the clamped prediction is used in
/// the denominator, so a saturated output still receives a gradient.
template <typename Real>
Tensor<Real> loss_gradient(LossKind kind, const Tensor<Real>& y, const Tensor<Real>& target);

template <typename Real>
struct BatchGradient {
    double loss = 0.0;  // mean over the batch
    std::vector<LayerParams<Real>> layers;
};

/// Mean loss and mean parameter gradient over a batch. Per-sample gradients
/// are summed in batch order, then scaled by 1/B.
template <typename Real>
BatchGradient<Real> batch_gradient(const NetworkParams<Real>& params, std::span<const Tensor<Real>> inputs,
                                   std::span<const Tensor<Real>> targets, LossKind kind);

/// Standard bias-corrected Adam update; increments the step counter.
template <typename Real>
void adam_step(NetworkParams<Real>& params, const std::vector<LayerParams<Real>>& gradients,
               double lr, const AdamConfig& cfg = {});

/// Number of weights + biases across the network.
template <typename Real>
std::size_t parameter_count(const NetworkParams<Real>& params);

}  // namespace insar::nn
