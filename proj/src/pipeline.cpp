#include "insar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "insar/sim.hpp"

namespace insar::pipeline {

using nn::Activation;

nn::NetworkSpec denoiser_spec() {
    return {
        nn::conv3x3(2, 16, Activation::Relu),
        nn::conv3x3(16, 8, Activation::Relu),
        nn::maxpool3(8),
        nn::conv3x3(8, 8, Activation::Relu),
        nn::upsample3(8),
        nn::conv3x3(8, 16, Activation::Relu),
        nn::conv3x3(16, 2, Activation::Relu),
    };
}

nn::NetworkSpec classifier_spec(int separable_layers, int maps) {
    if (separable_layers < 1 || maps < 1) throw ParameterError("classifier needs >= 1 separable layer and map");
    nn::NetworkSpec spec;
    int in = 2;
    for (int i = 0; i < separable_layers; ++i) {
        spec.push_back(nn::separable3x3(in, maps, Activation::Relu));
        in = maps;
    }
    spec.push_back(nn::conv3x3(in, 1, Activation::Sigmoid));
    return spec;
}

NetworkRole denoiser_role() { return {Role::Denoiser, denoiser_spec()}; }
NetworkRole classifier_role(int separable_layers, int maps) {
    return {Role::Classifier, classifier_spec(separable_layers, maps)};
}

TrainingConfig default_denoiser_config() {
    TrainingConfig cfg;
    cfg.patch_size = 60;
    cfg.epochs = 50;
    return cfg;
}

TrainingConfig default_classifier_config() {
    TrainingConfig cfg;
    cfg.patch_size = 64;
    cfg.epochs = 100;
    return cfg;
}

void validate(const TrainingConfig& cfg, Role role) {
    if (cfg.patches_per_image < 1) throw ParameterError("patches_per_image must be >= 1");
    if (cfg.patch_size < 1) throw ParameterError("patch_size must be >= 1");
    if (cfg.batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (!(cfg.initial_lr > 0.0) || !std::isfinite(cfg.initial_lr)) throw ParameterError("initial_lr must be > 0");
    if (cfg.lr_halving_period < 1) throw ParameterError("lr_halving_period must be >= 1");
    if (cfg.epochs < 0) throw ParameterError("epochs must be >= 0");
    if (role == Role::Denoiser && cfg.patch_size % 3 != 0)
        throw ParameterError("denoiser patch_size must be divisible by 3, got " + std::to_string(cfg.patch_size));
}

double learning_rate_at(const TrainingConfig& cfg, int epoch) {
    return cfg.initial_lr * std::ldexp(1.0, -(epoch / cfg.lr_halving_period));
}

std::vector<PatchCoord> sample_patch_coords(const std::vector<ImageSize>& images, const TrainingConfig& cfg) {
    std::mt19937_64 rng(sim::child_seed(cfg.seed, 0x7061746368ull));
    std::vector<PatchCoord> coords;
    coords.reserve(images.size() * static_cast<std::size_t>(cfg.patches_per_image));
    for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageSize s = images[i];
        if (s.width < cfg.patch_size || s.height < cfg.patch_size)
            throw ParameterError("image " + std::to_string(i) + " (" + std::to_string(s.width) + "x" +
                                 std::to_string(s.height) + ") is smaller than the " +
                                 std::to_string(cfg.patch_size) + " px patch");
        std::uniform_int_distribution<int> xs(0, s.width - cfg.patch_size);
        std::uniform_int_distribution<int> ys(0, s.height - cfg.patch_size);
        for (int k = 0; k < cfg.patches_per_image; ++k) {
            const int x = xs(rng);
            const int y = ys(rng);
            coords.push_back({static_cast<int>(i), x, y});
        }
    }
    return coords;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t patch_count, const TrainingConfig& cfg, int epoch) {
    std::vector<std::size_t> order(patch_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(sim::child_seed(cfg.seed, 0x65706f6368ull + static_cast<std::uint64_t>(epoch)));
    // Fisher-Yates with our own index draws; std::shuffle's algorithm is
    // implementation-defined.
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs)
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bs)));
    return batches;
}

nn::Tensor<float> to_tensor(const ComplexRaster& shifted) {
    nn::Tensor<float> t(2, shifted.height(), shifted.width());
    float* re = t.plane(0);
    float* im = t.plane(1);
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        re[i] = shifted[i].real();
        im[i] = shifted[i].imag();
    }
    return t;
}

ComplexRaster from_tensor(const nn::Tensor<float>& t) {
    if (t.channels() != 2) throw ShapeError("complex raster needs a 2-channel tensor");
    ComplexRaster out(t.width(), t.height());
    const float* re = t.plane(0);
    const float* im = t.plane(1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {re[i], im[i]};
    return out;
}

nn::Tensor<float> cut_patch(const ComplexRaster& image, PatchCoord at, int size) {
    if (at.x < 0 || at.y < 0 || at.x + size > image.width() || at.y + size > image.height())
        throw ParameterError("patch outside image");
    nn::Tensor<float> t(2, size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const Complex c = image(at.x + x, at.y + y);
            t.at(0, y, x) = c.real();
            t.at(1, y, x) = c.imag();
        }
    return t;
}

nn::Tensor<float> cut_patch(const LabelField& labels, PatchCoord at, int size) {
    if (at.x < 0 || at.y < 0 || at.x + size > labels.width() || at.y + size > labels.height())
        throw ParameterError("patch outside label field");
    nn::Tensor<float> t(1, size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) t.at(0, y, x) = labels(at.x + x, at.y + y) ? 1.0f : 0.0f;
    return t;
}

std::vector<ComplexRaster> preprocess_all(const std::vector<ComplexRaster>& images) {
    std::vector<ComplexRaster> out;
    out.reserve(images.size());
    for (const auto& z : images) out.push_back(saturate_and_normalize(z).shifted);
    return out;
}

TrainingResult train_network(const NetworkRole& role, const TrainingData& data, const TrainingConfig& cfg,
                             const ProgressCallback& progress) {
    return train_network(role, nn::xavier_init<float>(role.spec, sim::child_seed(cfg.seed, 0x696e6974ull)), data,
                         cfg, progress);
}

TrainingResult train_network(const NetworkRole& role, nn::NetworkParams<float> initial, const TrainingData& data,
                             const TrainingConfig& cfg, const ProgressCallback& progress) {
    validate(cfg, role.role);
    if (initial.spec != role.spec) throw ShapeError("initial parameters do not match the network role");
    if (data.inputs.empty()) throw ParameterError("no training images");
    const bool classifier = role.role == Role::Classifier;
    if (classifier && data.labels.size() != data.inputs.size())
        throw ParameterError("classifier training needs one label field per image");
    for (std::size_t i = 0; classifier && i < data.inputs.size(); ++i)
        if (!data.inputs[i].same_shape(data.labels[i]))
            throw ParameterError("label field " + std::to_string(i) + " differs in size from its image");

    std::vector<ImageSize> sizes;
    for (const auto& img : data.inputs) sizes.push_back({img.width(), img.height()});
    const std::vector<PatchCoord> coords = sample_patch_coords(sizes, cfg);
    const nn::LossKind loss_kind = classifier ? nn::LossKind::BinaryCrossEntropy : nn::LossKind::MeanSquaredError;

    TrainingResult result{std::move(initial), {}};
    auto& params = result.params;
    params.learning_rate = cfg.initial_lr;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = learning_rate_at(cfg, epoch);
        params.learning_rate = lr;
        const auto batches = make_batches(coords.size(), cfg, epoch);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            std::vector<nn::Tensor<float>> inputs, targets;
            inputs.reserve(batch.size());
            targets.reserve(batch.size());
            for (std::size_t idx : batch) {
                const PatchCoord at = coords[idx];
                const auto image = static_cast<std::size_t>(at.image);
                inputs.push_back(cut_patch(data.inputs[image], at, cfg.patch_size));
                targets.push_back(classifier ? cut_patch(data.labels[image], at, cfg.patch_size) : inputs.back());
            }
            const auto step = nn::batch_gradient<float>(params, inputs, targets, loss_kind);
            const double batch_loss = step.loss;
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "non-finite training loss (lr=" << lr << ", epoch=" << epoch << ", batch=" << b << ")";
                throw NumericError(msg.str());
            }
            epoch_loss += batch_loss;
            nn::adam_step(params, step.layers, lr);
        }
        epoch_loss /= static_cast<double>(batches.size());
        result.loss_history.push_back(epoch_loss);
        if (progress) progress({epoch, epoch_loss, lr});
    }
    return result;
}

ComplexRaster reflect_pad(const ComplexRaster& z, int multiple) {
    if (multiple < 1) throw ParameterError("pad multiple must be >= 1");
    const int w = z.width();
    const int h = z.height();
    const int pw = (w + multiple - 1) / multiple * multiple;
    const int ph = (h + multiple - 1) / multiple * multiple;
    if (pw == w && ph == h) return z;
    // Mirror without repeating the edge sample; fall back to edge replication
    // when the image is too narrow to mirror.
    auto mirror = [](int i, int n) {
        if (i < n) return i;
        const int m = 2 * (n - 1) - i;
        return m >= 0 ? m : n - 1;
    };
    ComplexRaster out(pw, ph);
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) out(x, y) = z(mirror(x, w), mirror(y, h));
    return out;
}

namespace {

void require_io_channels(const nn::NetworkParams<float>& params, int in, int out, const char* what) {
    nn::check_consistent(params);
    if (params.spec.front().in_channels != in || params.spec.back().out_channels != out)
        throw ShapeError(std::string(what) + " parameters have the wrong input/output channel counts");
}

}  // namespace

ComplexRaster denoise_image(const nn::NetworkParams<float>& params, const ComplexRaster& z) {
    require_io_channels(params, 2, 2, "denoiser");
    const Preprocessed pre = saturate_and_normalize(z);
    const ComplexRaster padded = reflect_pad(pre.shifted, 3);
    const nn::Tensor<float> y = nn::predict(params, to_tensor(padded));
    if (y.height() != padded.height() || y.width() != padded.width())
        throw ShapeError("denoiser does not preserve image size");
    ComplexRaster shifted(z.width(), z.height());
    for (int yy = 0; yy < z.height(); ++yy)
        for (int xx = 0; xx < z.width(); ++xx) shifted(xx, yy) = {y.at(0, yy, xx), y.at(1, yy, xx)};
    return unshift(shifted, pre.ceiling);
}

CoherenceMap classify_image(const nn::NetworkParams<float>& params, const ComplexRaster& z) {
    require_io_channels(params, 2, 1, "classifier");
    const Preprocessed pre = saturate_and_normalize(z);
    const nn::Tensor<float> y = nn::predict(params, to_tensor(pre.shifted));
    if (y.height() != z.height() || y.width() != z.width())
        throw ShapeError("classifier does not preserve image size");
    CoherenceMap out{ScalarRaster(z.width(), z.height()), 0};
    constexpr float lo = 1e-7f;
    constexpr float hi = 1.0f - 1e-7f;
    const float* scores = y.plane(0);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = std::clamp(scores[i], lo, hi);
    return out;
}

LabelField prepare_labels(const ComplexRaster& noisy, const ComplexRaster& denoised, const MrfConfig& cfg) {
    validate(cfg);
    const CoherenceMap coh = raw_coherence_map(noisy, denoised);
    return minimize_mrf(initialize_labels(coh, cfg.init_threshold), cfg.alpha);
}

}  // namespace insar::pipeline
