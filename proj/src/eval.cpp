#include "insar/eval.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include "insar/pipeline.hpp"

namespace insar::eval {

using nlohmann::json;

MetricsReport metrics_from_counts(const ConfusionCounts& c, std::string method) {
    MetricsReport r;
    r.method = std::move(method);
    r.counts = c;
    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.accuracy = ratio(c.tp + c.tn, c.total());
    r.precision = ratio(c.tp, c.tp + c.fp);
    r.recall = ratio(c.tp, c.tp + c.fn);
    r.images = 1;
    r.precision_images = r.precision ? 1 : 0;
    r.recall_images = r.recall ? 1 : 0;
    return r;
}

ConfusionCounts confusion(const LabelField& pred, const LabelField& truth) {
    if (!pred.same_shape(truth))
        throw ParameterError("prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                             " and truth " + std::to_string(truth.width()) + "x" +
                             std::to_string(truth.height()) + " differ in size");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t)
            ++c.tp;
        else if (p)
            ++c.fp;
        else if (t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

LabelField threshold_scores(const ScalarRaster& scores, double threshold) {
    LabelField out(scores.width(), scores.height());
    const auto t = static_cast<float>(threshold);
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= t ? 1 : 0;
    return out;
}

MetricsReport classification_metrics(const CoherenceMap& pred, const LabelField& truth, double threshold,
                                     std::string method) {
    return metrics_from_counts(confusion(threshold_scores(pred.values, threshold), truth), std::move(method));
}

MetricsReport classification_metrics(const LabelField& pred, const LabelField& truth, std::string method) {
    return metrics_from_counts(confusion(pred, truth), std::move(method));
}

MetricsReport average_reports(std::span<const MetricsReport> reports, std::string method) {
    if (reports.empty()) throw ParameterError("cannot average zero reports");
    MetricsReport out;
    out.method = std::move(method);
    double acc = 0, prec = 0, rec = 0;
    std::size_t n_acc = 0, n_prec = 0, n_rec = 0;
    for (const auto& r : reports) {
        out.counts.tp += r.counts.tp;
        out.counts.fp += r.counts.fp;
        out.counts.tn += r.counts.tn;
        out.counts.fn += r.counts.fn;
        if (r.accuracy) acc += *r.accuracy, ++n_acc;
        if (r.precision) prec += *r.precision, ++n_prec;
        if (r.recall) rec += *r.recall, ++n_rec;
        out.seconds += r.seconds;
        out.seconds_per_megapixel += r.seconds_per_megapixel;
    }
    const double n = static_cast<double>(reports.size());
    if (n_acc) out.accuracy = acc / static_cast<double>(n_acc);
    if (n_prec) out.precision = prec / static_cast<double>(n_prec);
    if (n_rec) out.recall = rec / static_cast<double>(n_rec);
    out.images = reports.size();
    out.precision_images = n_prec;
    out.recall_images = n_rec;
    out.seconds /= n;
    out.seconds_per_megapixel /= n;
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void set_timing(MetricsReport& r, double seconds, std::size_t pixels) {
    r.seconds = seconds;
    r.seconds_per_megapixel = pixels ? seconds * 1e6 / static_cast<double>(pixels) : 0.0;
}

}  // namespace

Comparison compare_methods(std::span<const EvalInput> inputs, const nn::NetworkParams<float>& classifier,
                           const EvalConfig& cfg) {
    if (inputs.empty()) throw ParameterError("compare_methods needs at least one sample");
    Comparison c;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const EvalInput& in = inputs[i];
        if (!in.sample) throw ParameterError("evaluation input " + std::to_string(i) + " has no sample");
        const sim::SimSample& s = *in.sample;
        const ComplexRaster* reference = &s.clean;
        if (cfg.boxcar_reference == BoxcarReference::Denoised) {
            if (!in.denoised)
                throw ParameterError("boxcar baseline needs the denoised image for sample " + std::to_string(i));
            reference = in.denoised;
        }

        auto start = Clock::now();
        const CoherenceMap boxcar = estimate_coherence(s.noisy, *reference, cfg.boxcar_window);
        const double boxcar_seconds = seconds_since(start);

        start = Clock::now();
        const CoherenceMap scores = pipeline::classify_image(classifier, s.noisy);
        const double proposed_seconds = seconds_since(start);

        auto b = classification_metrics(boxcar, s.truth_mask, cfg.threshold, "Boxcar");
        set_timing(b, boxcar_seconds, s.noisy.size());
        auto p = classification_metrics(scores, s.truth_mask, cfg.threshold, "Proposed");
        set_timing(p, proposed_seconds, s.noisy.size());
        c.boxcar_per_image.push_back(b);
        c.proposed_per_image.push_back(p);
    }
    c.boxcar = average_reports(c.boxcar_per_image, "Boxcar");
    c.proposed = average_reports(c.proposed_per_image, "Proposed");
    return c;
}

MetricsReport label_quality(std::span<const LabelField> labels, std::span<const LabelField> truths) {
    if (labels.size() != truths.size()) throw ParameterError("label_quality: list lengths differ");
    std::vector<MetricsReport> per;
    for (std::size_t i = 0; i < labels.size(); ++i)
        per.push_back(classification_metrics(labels[i], truths[i], "label quality"));
    return average_reports(per, "label quality");
}

json to_json(const MetricsReport& r, bool with_timing) {
    auto opt = [](const std::optional<double>& v) -> json { return v ? json(*v) : json(nullptr); };
    json j{{"method", r.method},
           {"accuracy", opt(r.accuracy)},
           {"precision", opt(r.precision)},
           {"recall", opt(r.recall)},
           {"images", r.images},
           {"precision_images", r.precision_images},
           {"recall_images", r.recall_images},
           {"confusion", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}}};
    if (with_timing) {
        j["seconds_per_image"] = r.seconds;
        j["seconds_per_megapixel"] = r.seconds_per_megapixel;
    }
    return j;
}

json report_json(const Comparison& c, const std::optional<MetricsReport>& labels) {
    json j;
    j["threshold"] = kDecisionThreshold;
    j["images"] = c.proposed.images;
    j["methods"] = json::array({to_json(c.boxcar), to_json(c.proposed)});
    j["unavailable_methods"] = json::array({"NLInSAR", "NLSAR"});
    if (labels) j["label_quality"] = to_json(*labels);
    j["per_image"] = json::array();
    for (std::size_t i = 0; i < c.proposed_per_image.size(); ++i)
        j["per_image"].push_back({{"index", i},
                                  {"boxcar", to_json(c.boxcar_per_image[i])},
                                  {"proposed", to_json(c.proposed_per_image[i])}});
    json ref = json::array();
    for (const auto& r : kPublishedScores)
        ref.push_back({{"method", r.method}, {"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall}});
    j["published_reference"] = ref;
    return j;
}

json timing_json(const Comparison& c) {
    return {{"note", "wall-clock inference time, excluding I/O"},
            {"methods", json::array({to_json(c.boxcar, true), to_json(c.proposed, true)})}};
}

std::string format_table(const Comparison& c) {
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string("n/a");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        return std::string(buf);
    };
    auto row = [](const std::string& name, const std::string& a, const std::string& b, const std::string& cc,
                  const std::string& d) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-10s %10s %10s %10s %10s\n", name.c_str(), a.c_str(), b.c_str(), cc.c_str(),
                      d.c_str());
        return std::string(buf);
    };
    std::ostringstream out;
    out << "Mean per-image scores over " << c.proposed.images << " simulated interferograms (threshold "
        << kDecisionThreshold << ")\n";
    out << row("Metric", "Boxcar", "NLInSAR", "NLSAR", "Proposed");
    out << row("accuracy", cell(c.boxcar.accuracy), "n/a", "n/a", cell(c.proposed.accuracy));
    out << row("precision", cell(c.boxcar.precision), "n/a", "n/a", cell(c.proposed.precision));
    out << row("recall", cell(c.boxcar.recall), "n/a", "n/a", cell(c.proposed.recall));
    return out.str();
}

}  // namespace insar::eval
