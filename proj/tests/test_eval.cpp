#include <doctest.h>

#include <algorithm>
#include <random>

#include "insar/eval.hpp"
#include "insar/pipeline.hpp"

using namespace insar;
using namespace insar::eval;

namespace {

sim::SimSample small_sample(std::uint64_t seed) { return sim::make_sample(sim::random_scene(48, 48, seed)); }

}  // namespace

TEST_CASE("perfect prediction scores one") {
    LabelField t(4, 3);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = i % 3 == 0;
    const auto r = classification_metrics(t, t);
    CHECK(*r.accuracy == 1.0);
    CHECK(*r.precision == 1.0);
    CHECK(*r.recall == 1.0);
}

TEST_CASE("metrics from known counts") {
    const auto r = metrics_from_counts({3, 1, 5, 1});
    CHECK(*r.accuracy == doctest::Approx(0.8));
    CHECK(*r.precision == doctest::Approx(0.75));
    CHECK(*r.recall == doctest::Approx(0.75));
    const auto none = metrics_from_counts({0, 0, 4, 2});
    CHECK_FALSE(none.precision.has_value());
    CHECK(*none.recall == 0.0);
    CHECK(none.counts.fn == 2);
}

TEST_CASE("metric identities hold for random counts") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 500; ++t) {
        const ConfusionCounts c{rng() % 50, rng() % 50, rng() % 50, rng() % 50};
        const auto r = metrics_from_counts(c);
        if (c.total() == 0) {
            CHECK_FALSE(r.accuracy.has_value());
            continue;
        }
        CHECK(*r.accuracy == static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()));
        if (c.tp + c.fp) CHECK(*r.precision == static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp));
        if (c.tp + c.fn) CHECK(*r.recall == static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn));
    }
}

TEST_CASE("confusion counts sum to the pixel total") {
    std::mt19937_64 rng(2);
    LabelField a(9, 7), b(9, 7);
    for (auto& v : a.values()) v = rng() & 1u;
    for (auto& v : b.values()) v = rng() & 1u;
    CHECK(confusion(a, b).total() == 63);
    CHECK_THROWS_AS(confusion(a, LabelField(7, 9)), ParameterError);
}

TEST_CASE("thresholding is inclusive and the identity on hard masks") {
    ScalarRaster s(3, 1);
    s[0] = 0.6f;
    s[1] = 0.59f;
    s[2] = 1.0f;
    CHECK(threshold_scores(s, 0.6) == LabelField(3, 1, std::vector<std::uint8_t>{1, 0, 1}));
    LabelField m(5, 5);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = i % 4 == 1;
    CHECK(threshold_scores(to_scalar(m), 0.6) == m);
}

TEST_CASE("averaging is a permutation-invariant mean of per-image ratios") {
    std::vector<MetricsReport> r{metrics_from_counts({3, 1, 5, 1}), metrics_from_counts({10, 0, 0, 0}),
                                 metrics_from_counts({0, 0, 4, 4})};
    const auto avg = average_reports(r, "x");
    CHECK(*avg.accuracy == doctest::Approx((0.8 + 1.0 + 0.5) / 3));
    CHECK(*avg.precision == doctest::Approx((0.75 + 1.0) / 2));
    CHECK(avg.precision_images == 2);
    CHECK(*avg.recall == doctest::Approx((0.75 + 1.0 + 0.0) / 3));
    std::reverse(r.begin(), r.end());
    const auto rev = average_reports(r, "x");
    CHECK(*rev.accuracy == doctest::Approx(*avg.accuracy));
    CHECK(rev.counts == avg.counts);

    const std::vector<MetricsReport> same(4, metrics_from_counts({3, 1, 5, 1}));
    const auto s = average_reports(same, "y");
    CHECK(*s.accuracy == doctest::Approx(0.8));
    CHECK(*s.precision == doctest::Approx(0.75));
    CHECK_THROWS_AS(average_reports({}, "z"), ParameterError);
}

TEST_CASE("published reference scores") {
    const auto& p = kPublishedScores[3];
    CHECK(std::string(p.method) == "Proposed");
    CHECK(p.accuracy == 0.8425);
    CHECK(p.precision == 0.8399);
    CHECK(p.recall == 0.9107);
    CHECK(kPublishedScores[0].accuracy == 0.8008);
}

TEST_CASE("method comparison is deterministic and reports both methods") {
    const auto clf = nn::xavier_init<float>(pipeline::classifier_spec(2, 4), 1);
    const std::vector<sim::SimSample> samples{small_sample(1), small_sample(2)};
    std::vector<EvalInput> inputs;
    for (const auto& s : samples) inputs.push_back({&s, nullptr});
    EvalConfig cfg;
    cfg.boxcar_reference = BoxcarReference::Clean;
    const auto a = compare_methods(inputs, clf, cfg);
    const auto b = compare_methods(inputs, clf, cfg);
    CHECK(report_json(a) == report_json(b));
    CHECK(a.boxcar.images == 2);
    CHECK(a.boxcar_per_image.size() == 2);
    CHECK(a.boxcar.accuracy.has_value());

    // the denoised reference is required unless configured otherwise
    CHECK_THROWS_AS(compare_methods(inputs, clf), ParameterError);
    const auto den = samples[0].clean;
    const std::vector<EvalInput> with{{&samples[0], &den}};
    const auto c = compare_methods(with, clf);
    CHECK(c.boxcar.counts == a.boxcar_per_image[0].counts);
}

TEST_CASE("a repeated sample averages to its single report") {
    const auto clf = nn::xavier_init<float>(pipeline::classifier_spec(1, 2), 2);
    const auto s = small_sample(3);
    EvalConfig cfg;
    cfg.boxcar_reference = BoxcarReference::Clean;
    const std::vector<EvalInput> one{{&s, nullptr}}, three{{&s, nullptr}, {&s, nullptr}, {&s, nullptr}};
    const auto a = compare_methods(one, clf, cfg);
    const auto b = compare_methods(three, clf, cfg);
    CHECK(*a.boxcar.accuracy == doctest::Approx(*b.boxcar.accuracy));
    CHECK(*a.proposed.recall == doctest::Approx(*b.proposed.recall));
}

TEST_CASE("reports and table layout") {
    const auto clf = nn::xavier_init<float>(pipeline::classifier_spec(1, 2), 3);
    const auto s = small_sample(4);
    EvalConfig cfg;
    cfg.boxcar_reference = BoxcarReference::Clean;
    const std::vector<EvalInput> in{{&s, nullptr}};
    const auto c = compare_methods(in, clf, cfg);
    const auto j = report_json(c);
    CHECK(j["methods"].size() == 2);
    CHECK(j["methods"][0]["method"] == "Boxcar");
    CHECK_FALSE(j["methods"][0].contains("seconds_per_image"));
    CHECK(j["published_reference"].size() == 4);
    CHECK(timing_json(c)["methods"][1].contains("seconds_per_megapixel"));

    const auto table = format_table(c);
    CHECK(table.find("NLInSAR") != std::string::npos);
    CHECK(table.find("n/a") != std::string::npos);
    CHECK(table.find("accuracy") != std::string::npos);
    CHECK(table.find("recall") != std::string::npos);

    const std::vector<LabelField> labels{s.truth_mask}, truths{s.truth_mask};
    const auto q = label_quality(labels, truths);
    CHECK(*q.accuracy == 1.0);
    CHECK(report_json(c, q).contains("label_quality"));
}
