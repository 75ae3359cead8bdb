#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "insar/coherence.hpp"
#include "insar/mrf.hpp"
#include "insar/nn.hpp"
#include "insar/raster.hpp"

namespace insar::pipeline {

enum class Role { Denoiser, Classifier };

struct NetworkRole {
    Role role = Role::Classifier;
    nn::NetworkSpec spec;
};

/// conv16 -> conv8 -> maxpool3 -> conv8 -> upsample3 -> conv16 -> conv2, ReLU
/// after every convolution including the last.
nn::NetworkSpec denoiser_spec();

/// `separable_layers` depthwise-separable 3x3 layers with `maps` feature maps
/// and ReLU, then a plain 3x3 conv to one sigmoid output map.
nn::NetworkSpec classifier_spec(int separable_layers = 4, int maps = 16);

NetworkRole denoiser_role();
NetworkRole classifier_role(int separable_layers = 4, int maps = 16);

struct TrainingConfig {
    int patches_per_image = 500;
    int patch_size = 64;
    int batch_size = 100;
    double initial_lr = 1e-3;
    int lr_halving_period = 10;  // epochs
    int epochs = 100;
    std::uint64_t seed = 1;
};

TrainingConfig default_denoiser_config();    // 60x60 patches, 50 epochs
TrainingConfig default_classifier_config();  // 64x64 patches, 100 epochs

void validate(const TrainingConfig& cfg, Role role);

/// initial_lr * 2^-floor(epoch / lr_halving_period).
double learning_rate_at(const TrainingConfig& cfg, int epoch);

struct PatchCoord {
    int image = 0;
    int x = 0;  // top-left corner
    int y = 0;
    friend bool operator==(const PatchCoord&, const PatchCoord&) = default;
};

struct ImageSize {
    int width = 0;
    int height = 0;
};

/// patches_per_image uniformly drawn top-left corners per image, in image
/// order. Deterministic for cfg.seed. Throws ParameterError when an image is
/// smaller than the patch.
std::vector<PatchCoord> sample_patch_coords(const std::vector<ImageSize>& images, const TrainingConfig& cfg);

/// Shuffles patch indices for one epoch and chunks them into batches of
/// cfg.batch_size (the last batch may be short).
std::vector<std::vector<std::size_t>> make_batches(std::size_t patch_count, const TrainingConfig& cfg, int epoch);

/// Two-channel tensor (re, im) of a preprocessed raster.
nn::Tensor<float> to_tensor(const ComplexRaster& shifted);
ComplexRaster from_tensor(const nn::Tensor<float>& t);

nn::Tensor<float> cut_patch(const ComplexRaster& image, PatchCoord at, int size);
nn::Tensor<float> cut_patch(const LabelField& labels, PatchCoord at, int size);

struct TrainingData {
    /// Preprocessed (saturated, normalized, shifted) interferograms.
    std::vector<ComplexRaster> inputs;
    /// Classifier targets, aligned with inputs; empty for the denoiser.
    std::vector<LabelField> labels;
};

/// Runs saturate_and_normalize on each image.
std::vector<ComplexRaster> preprocess_all(const std::vector<ComplexRaster>& images);

struct EpochReport {
    int epoch = 0;
    double loss = 0.0;
    double learning_rate = 0.0;
};

using ProgressCallback = std::function<void(const EpochReport&)>;

struct TrainingResult {
    nn::NetworkParams<float> params;
    std::vector<double> loss_history;  // mean batch loss per epoch
};

/// Adam training with the step-halving schedule. The denoiser reconstructs
/// its input (MSE); the classifier fits label patches (BCE). Throws
/// NumericError on a non-finite batch loss.
TrainingResult train_network(const NetworkRole& role, const TrainingData& data, const TrainingConfig& cfg,
                             const ProgressCallback& progress = {});

/// Same, continuing from given parameters.
TrainingResult train_network(const NetworkRole& role, nn::NetworkParams<float> initial, const TrainingData& data,
                             const TrainingConfig& cfg, const ProgressCallback& progress = {});

/// Reflect-pads right/bottom edges up to the next multiple of `multiple`.
ComplexRaster reflect_pad(const ComplexRaster& z, int multiple);

/// Whole-image denoising; output has the input's size and scale.
ComplexRaster denoise_image(const nn::NetworkParams<float>& params, const ComplexRaster& z);

/// Soft coherence scores in (0, 1), same size as the input.
CoherenceMap classify_image(const nn::NetworkParams<float>& params, const ComplexRaster& z);

/// raw_coherence_map -> initialize_labels -> minimize_mrf.
LabelField prepare_labels(const ComplexRaster& noisy, const ComplexRaster& denoised, const MrfConfig& cfg = {});

}  // namespace insar::pipeline
