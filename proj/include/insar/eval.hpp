#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "insar/coherence.hpp"
#include "insar/mrf.hpp"
#include "insar/nn.hpp"
#include "insar/sim.hpp"

namespace insar::eval {

inline constexpr double kDecisionThreshold = 0.6;

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::uint64_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Ratios are empty when their denominator is zero (e.g. precision with no
/// positive predictions); `counts` carries the context.
struct MetricsReport {
    std::string method;
    ConfusionCounts counts;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    /// Number of images a ratio was defined for (averaged reports).
    std::size_t images = 1;
    std::size_t precision_images = 1;
    std::size_t recall_images = 1;
    /// Mean wall-clock inference time per image, and scaled to 1000x1000 px.
    double seconds = 0.0;
    double seconds_per_megapixel = 0.0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport metrics_from_counts(const ConfusionCounts& counts, std::string method = {});

ConfusionCounts confusion(const LabelField& pred, const LabelField& truth);

/// Scores >= threshold become coherent (1).
LabelField threshold_scores(const ScalarRaster& scores, double threshold = kDecisionThreshold);

MetricsReport classification_metrics(const CoherenceMap& pred, const LabelField& truth,
                                     double threshold = kDecisionThreshold, std::string method = {});
MetricsReport classification_metrics(const LabelField& pred, const LabelField& truth, std::string method = {});

/// Mean of per-image ratios (each over the images where it is defined);
/// counts and timings are summed / averaged alongside.
MetricsReport average_reports(std::span<const MetricsReport> reports, std::string method);

enum class BoxcarReference { Denoised, Clean };

struct EvalConfig {
    int boxcar_window = kRawCoherenceWindow;
    BoxcarReference boxcar_reference = BoxcarReference::Denoised;
    double threshold = kDecisionThreshold;
};

struct Comparison {
    MetricsReport boxcar;
    MetricsReport proposed;
    std::vector<MetricsReport> boxcar_per_image;
    std::vector<MetricsReport> proposed_per_image;
};

/// One sample to score. `denoised` is required when the boxcar baseline
/// pairs the noisy image with its denoised version.
struct EvalInput {
    const sim::SimSample* sample = nullptr;
    const ComplexRaster* denoised = nullptr;
};

/// Boxcar coherence (window cfg.boxcar_window) and classifier scores, both
/// thresholded at cfg.threshold, scored against each sample's truth mask.
Comparison compare_methods(std::span<const EvalInput> inputs, const nn::NetworkParams<float>& classifier,
                           const EvalConfig& cfg = {});

/// MRF-prepared labels scored against simulation ground truth.
MetricsReport label_quality(std::span<const LabelField> labels, std::span<const LabelField> truths);

/// Published scores, shown next to ours for orientation.
struct ReferenceScores {
    const char* method;
    double accuracy, precision, recall;
};
inline constexpr ReferenceScores kPublishedScores[] = {
    {"Boxcar", 0.8008, 0.8248, 0.8522},
    {"NLInSAR", 0.8273, 0.8126, 0.9265},
    {"NLSAR", 0.4951, 0.7389, 0.2983},
    {"Proposed", 0.8425, 0.8399, 0.9107},
};

/// Deterministic JSON (no timings).
nlohmann::json report_json(const Comparison& c, const std::optional<MetricsReport>& labels = std::nullopt);
nlohmann::json timing_json(const Comparison& c);
nlohmann::json to_json(const MetricsReport& r, bool with_timing = false);

/// Plain-text table: rows accuracy/precision/recall; columns Boxcar,
/// NLInSAR, NLSAR, Proposed (the two non-local methods print n/a).
std::string format_table(const Comparison& c);

}  // namespace insar::eval
