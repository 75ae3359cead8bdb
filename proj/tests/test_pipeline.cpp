#include <doctest.h>

#include <cmath>
#include <set>

#include "insar/pipeline.hpp"
#include "insar/sim.hpp"

using namespace insar;
using namespace insar::pipeline;

namespace {

sim::SimSample flat_sample(int size, double gamma, std::uint64_t seed) {
    sim::SceneSpec spec;
    spec.width = spec.height = size;
    spec.background_gamma = gamma;
    spec.bubbles.push_back({size / 2.0, size / 3.0, size / 5.0, 7.0});
    spec.seed = seed;
    return sim::make_sample(spec);
}

double mean(const ScalarRaster& r) {
    double s = 0;
    for (float v : r.values()) s += v;
    return s / static_cast<double>(r.size());
}

}  // namespace

TEST_CASE("network definitions") {
    const auto d = denoiser_spec();
    REQUIRE(d.size() == 7);
    CHECK(d[0] == nn::conv3x3(2, 16, nn::Activation::Relu));
    CHECK(d[2].kind == nn::LayerKind::MaxPool3);
    CHECK(d[4].kind == nn::LayerKind::Upsample3);
    CHECK(d[6] == nn::conv3x3(16, 2, nn::Activation::Relu));
    const auto c = classifier_spec();
    REQUIRE(c.size() == 5);
    for (int i = 0; i < 4; ++i) CHECK(c[static_cast<std::size_t>(i)].kind == nn::LayerKind::SeparableConv);
    CHECK(c.back() == nn::conv3x3(16, 1, nn::Activation::Sigmoid));
    CHECK(classifier_spec(2, 8).size() == 3);
    CHECK_THROWS_AS(classifier_spec(0, 8), ParameterError);
}

TEST_CASE("learning rate halves every ten epochs") {
    const auto cfg = default_classifier_config();
    CHECK(learning_rate_at(cfg, 0) == 1e-3);
    CHECK(learning_rate_at(cfg, 9) == 1e-3);
    CHECK(learning_rate_at(cfg, 10) == 5e-4);
    CHECK(learning_rate_at(cfg, 20) == 2.5e-4);
    CHECK(default_denoiser_config().patch_size == 60);
    CHECK(default_denoiser_config().epochs == 50);
    CHECK(cfg.patch_size == 64);
    CHECK(cfg.epochs == 100);
    CHECK(cfg.batch_size == 100);
    CHECK(cfg.patches_per_image == 500);
}

TEST_CASE("training config validation") {
    auto cfg = default_denoiser_config();
    CHECK_NOTHROW(validate(cfg, Role::Denoiser));
    cfg.patch_size = 64;
    CHECK_THROWS_AS(validate(cfg, Role::Denoiser), ParameterError);
    CHECK_NOTHROW(validate(cfg, Role::Classifier));
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate(cfg, Role::Classifier), ParameterError);
}

TEST_CASE("patch coordinates are in bounds, seeded and counted per image") {
    TrainingConfig cfg;
    cfg.patch_size = 64;
    cfg.patches_per_image = 500;
    const std::vector<ImageSize> sizes(135, ImageSize{1000, 1000});
    const auto coords = sample_patch_coords(sizes, cfg);
    CHECK(coords.size() == 67500);
    for (const auto& c : coords) {
        CHECK(c.x >= 0);
        CHECK(c.y >= 0);
        CHECK(c.x + 64 <= 1000);
        CHECK(c.y + 64 <= 1000);
    }
    CHECK(coords == sample_patch_coords(sizes, cfg));
    cfg.seed = 2;
    CHECK_FALSE(coords == sample_patch_coords(sizes, cfg));
    CHECK_THROWS_AS(sample_patch_coords({{64, 63}}, cfg), ParameterError);
    CHECK(sample_patch_coords({{64, 64}}, cfg).front() == PatchCoord{0, 0, 0});
}

TEST_CASE("batches partition a shuffled epoch") {
    TrainingConfig cfg;
    cfg.batch_size = 7;
    const auto b = make_batches(30, cfg, 3);
    REQUIRE(b.size() == 5);
    CHECK(b.back().size() == 2);
    std::set<std::size_t> seen;
    for (const auto& batch : b) seen.insert(batch.begin(), batch.end());
    CHECK(seen.size() == 30);
    CHECK(b == make_batches(30, cfg, 3));
    CHECK_FALSE(b == make_batches(30, cfg, 4));
}

TEST_CASE("label patches align with image patches") {
    ComplexRaster img(20, 16);
    LabelField labels(20, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 20; ++x) {
            img(x, y) = {static_cast<float>(x), static_cast<float>(y)};
            labels(x, y) = (x * 3 + y) % 2;
        }
    TrainingConfig cfg;
    cfg.patch_size = 5;
    cfg.patches_per_image = 40;
    for (const auto& at : sample_patch_coords({{20, 16}}, cfg)) {
        const auto p = cut_patch(img, at, 5);
        const auto l = cut_patch(labels, at, 5);
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                const int ix = static_cast<int>(p.at(0, y, x)), iy = static_cast<int>(p.at(1, y, x));
                CHECK(ix == at.x + x);
                CHECK(iy == at.y + y);
                CHECK(l.at(0, y, x) == static_cast<float>(labels(ix, iy)));
            }
    }
    CHECK_THROWS_AS(cut_patch(img, {0, 17, 0}, 5), ParameterError);
}

TEST_CASE("reflection padding") {
    ComplexRaster z(4, 2);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = {static_cast<float>(i), 0};
    const auto p = reflect_pad(z, 3);
    CHECK(p.width() == 6);
    CHECK(p.height() == 3);
    CHECK(p(4, 0) == z(2, 0));
    CHECK(p(5, 1) == z(1, 1));
    CHECK(p(0, 2) == z(0, 0));
    CHECK(reflect_pad(ComplexRaster(999, 999), 3).width() == 999);
    CHECK(reflect_pad(ComplexRaster(1, 1), 3).width() == 3);
}

TEST_CASE("zero-epoch training returns the initial parameters") {
    const auto s = flat_sample(30, 0.9, 1);
    TrainingData data{{saturate_and_normalize(s.noisy).shifted}, {s.truth_mask}};
    TrainingConfig cfg;
    cfg.epochs = 0;
    cfg.patch_size = 10;
    cfg.patches_per_image = 3;
    const auto role = classifier_role(2, 4);
    const auto init = nn::xavier_init<float>(role.spec, 5);
    const auto r = train_network(role, init, data, cfg);
    CHECK(r.params == init);
    CHECK(r.loss_history.empty());
}

TEST_CASE("classifier overfits a single batch") {
    // Labels follow the sign of the imaginary part, learnable by a 3x3 net.
    const auto s = flat_sample(24, 0.9, 2);
    const auto shifted = saturate_and_normalize(s.noisy).shifted;
    LabelField labels(24, 24);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = shifted[i].imag() > 1.0f;
    TrainingData data{{shifted}, {labels}};
    TrainingConfig cfg;
    cfg.patch_size = 12;
    cfg.patches_per_image = 4;
    cfg.batch_size = 4;
    cfg.epochs = 200;
    cfg.initial_lr = 1e-2;
    cfg.lr_halving_period = 1000;
    const auto r = train_network(classifier_role(2, 8), data, cfg);
    REQUIRE(r.loss_history.size() == 200);
    CHECK(r.loss_history.back() < 0.1 * r.loss_history.front());
}

TEST_CASE("training is reproducible and reports progress") {
    const auto s = flat_sample(36, 0.8, 3);
    TrainingData data{{saturate_and_normalize(s.noisy).shifted}, {}};
    TrainingConfig cfg;
    cfg.patch_size = 12;
    cfg.patches_per_image = 6;
    cfg.batch_size = 4;
    cfg.epochs = 3;
    std::vector<EpochReport> seen;
    const auto a = train_network(denoiser_role(), data, cfg, [&](const EpochReport& e) { seen.push_back(e); });
    const auto b = train_network(denoiser_role(), data, cfg);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.params == b.params);
    REQUIRE(seen.size() == 3);
    CHECK(seen[2].epoch == 2);
    CHECK(seen[2].loss == a.loss_history[2]);
    CHECK(seen[0].learning_rate == 1e-3);
}

TEST_CASE("non-finite loss aborts training with context") {
    const auto s = flat_sample(30, 0.9, 4);
    TrainingData data{{saturate_and_normalize(s.noisy).shifted}, {s.truth_mask}};
    TrainingConfig cfg;
    cfg.patch_size = 10;
    cfg.patches_per_image = 2;
    const auto role = classifier_role(1, 2);
    auto init = nn::xavier_init<float>(role.spec, 1);
    init.layers.back().bias[0] = std::nanf("");
    try {
        train_network(role, init, data, cfg);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("lr=") != std::string::npos);
        CHECK(msg.find("epoch=0") != std::string::npos);
        CHECK(msg.find("batch=0") != std::string::npos);
    }
}

TEST_CASE("whole-image inference preserves size") {
    const auto den = nn::xavier_init<float>(denoiser_spec(), 1);
    const auto clf = nn::xavier_init<float>(classifier_spec(), 1);
    for (int side : {10, 64}) {
        const auto s = flat_sample(side, 0.7, 5);
        const auto d = denoise_image(den, s.noisy);
        CHECK(d.width() == side);
        CHECK(d.height() == side);
        const auto c = classify_image(clf, s.noisy);
        CHECK(c.values.width() == side);
        for (float v : c.values.values()) {
            CHECK(v > 0.0f);
            CHECK(v < 1.0f);
        }
    }
    const auto big = flat_sample(1000, 0.7, 6);
    CHECK(denoise_image(den, big.noisy).same_shape(big.noisy));
    CHECK(classify_image(clf, big.noisy).values.same_shape(big.noisy));
    CHECK_THROWS_AS(classify_image(den, big.noisy), ShapeError);
    CHECK_THROWS_AS(denoise_image(clf, big.noisy), ShapeError);
}

TEST_CASE("a briefly trained denoiser output is correlated with the signal") {
    const auto a = flat_sample(90, 0.8, 7);
    const auto b = flat_sample(90, 0.8, 8);
    TrainingData data{{saturate_and_normalize(a.noisy).shifted, saturate_and_normalize(b.noisy).shifted}, {}};
    TrainingConfig cfg;
    cfg.patch_size = 30;
    cfg.patches_per_image = 40;
    cfg.batch_size = 20;
    cfg.epochs = 4;
    const auto den = train_network(denoiser_role(), data, cfg).params;

    const auto test = flat_sample(90, 0.8, 9);
    const auto other = sim::synthesize_interferogram(sim::generate_scene(test.scene).phase, test.gamma_true, 12345);
    const double with_denoised = mean(raw_coherence_map(test.noisy, denoise_image(den, test.noisy)).values);
    const double with_copy = mean(raw_coherence_map(test.noisy, other).values);
    CHECK(with_denoised > with_copy);
}

TEST_CASE("label preparation") {
    const auto s = flat_sample(40, 0.5, 10);
    CHECK(prepare_labels(s.noisy, s.noisy) == LabelField(40, 40, 1));

    ScalarRaster zero_phase(60, 60), zero_gamma(60, 60);
    const auto n1 = sim::synthesize_interferogram(zero_phase, zero_gamma, 1);
    const auto n2 = sim::synthesize_interferogram(zero_phase, zero_gamma, 2);
    const auto labels = prepare_labels(n1, n2);
    CHECK(labels.same_shape(n1));
    std::size_t ones = 0;
    for (auto v : labels.values()) {
        CHECK(v <= 1);
        ones += v;
    }
    CHECK(ones <= labels.size() / 100);
    CHECK_THROWS_AS(prepare_labels(n1, ComplexRaster(5, 5)), ParameterError);
}
