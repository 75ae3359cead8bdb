#include <doctest.h>

#include <algorithm>
#include <random>

#include "insar/coherence.hpp"
#include "insar/sim.hpp"
#include "oracles.hpp"

using namespace insar;

namespace {

ComplexRaster noise(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, 0.70710678f);
    ComplexRaster r(w, h);
    for (auto& v : r.values()) v = {n(rng), n(rng)};
    return r;
}

bool all_near(const ScalarRaster& r, double value, double tol) {
    for (float v : r.values())
        if (std::abs(v - value) > tol) return false;
    return true;
}

double mean(const ScalarRaster& r) {
    double s = 0;
    for (float v : r.values()) s += v;
    return s / static_cast<double>(r.size());
}

}  // namespace

TEST_CASE("boxcar mean examples") {
    ScalarRaster r(3, 3, 0.0f);
    r(1, 1) = 9.0f;
    CHECK(boxcar_mean(r, 3)(1, 1) == doctest::Approx(1.0));
    CHECK(boxcar_mean(r, 1) == r);

    ScalarRaster c(6, 5, 0.25f);
    for (int w : {1, 3, 5}) CHECK(all_near(boxcar_mean(c, w), 0.25, 1e-7));

    CHECK_THROWS_AS(boxcar_mean(c, 2), ParameterError);
    CHECK_THROWS_AS(boxcar_mean(c, 7), ParameterError);
    CHECK_THROWS_AS(boxcar_mean(c, 0), ParameterError);
}

TEST_CASE("boxcar mean uses replicated borders") {
    ScalarRaster r(4, 1, 0.0f);
    r(0, 0) = 3.0f;
    // window 3 is too tall for a 1-row raster
    CHECK_THROWS_AS(boxcar_mean(r, 3), ParameterError);
    ScalarRaster s(3, 3, 0.0f);
    s(0, 0) = 9.0f;
    // corner window replicates (0,0) into 4 of its 9 cells
    CHECK(boxcar_mean(s, 3)(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("coherence matches direct window enumeration") {
    const auto a = noise(11, 8, 1);
    auto b = noise(11, 8, 2);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.8f * a[i];
    for (int w : {1, 3, 5, 7}) {
        const auto m = estimate_coherence(a, b, w);
        CHECK(m.window == w);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 11; ++x)
                CHECK(m.values(x, y) == doctest::Approx(oracle::direct_coherence(a, b, w, x, y)).epsilon(1e-5));
    }
}

TEST_CASE("self coherence and global phase invariance") {
    const auto a = noise(16, 16, 3);
    CHECK(all_near(estimate_coherence(a, a, 5).values, 1.0, 1e-5));
    ComplexRaster rotated = a;
    for (auto& v : rotated.values()) v *= std::polar(1.0f, 1.1f);
    CHECK(all_near(estimate_coherence(a, rotated, 3).values, 1.0, 1e-5));
    CHECK(all_near(raw_coherence_map(a, a).values, 1.0, 1e-5));
}

TEST_CASE("zero-energy windows give zero coherence") {
    const auto a = noise(9, 9, 4);
    const auto m = raw_coherence_map(a, ComplexRaster(9, 9));
    for (float v : m.values.values()) CHECK(v == 0.0f);
}

TEST_CASE("coherence is symmetric, bounded and scale invariant") {
    const auto a = noise(20, 14, 5);
    auto b = noise(20, 14, 6);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.5f * a[i];
    const auto ab = estimate_coherence(a, b, 7);
    const auto ba = estimate_coherence(b, a, 7);
    ComplexRaster scaled = a;
    for (auto& v : scaled.values()) v *= Complex(-3.0f, 40.0f);
    const auto sb = estimate_coherence(scaled, b, 7);
    for (std::size_t i = 0; i < ab.values.size(); ++i) {
        CHECK(ab.values[i] >= 0.0f);
        CHECK(ab.values[i] <= 1.0f);
        CHECK(ab.values[i] == doctest::Approx(ba.values[i]).epsilon(1e-6));
        CHECK(std::abs(sb.values[i] - ab.values[i]) < 1e-6);
    }
}

TEST_CASE("coherence rejects mismatched inputs") {
    CHECK_THROWS_AS(estimate_coherence(ComplexRaster(4, 4), ComplexRaster(5, 4), 3), ParameterError);
    CHECK_THROWS_AS(estimate_coherence(ComplexRaster(4, 4), ComplexRaster(4, 4), 2), ParameterError);
}

TEST_CASE("null distribution of 7x7 coherence") {
    // 512x512 independent pairs; windows overlap but their mean is unbiased.
    const auto a = noise(512, 512, 7);
    const auto b = noise(512, 512, 8);
    const auto m = estimate_coherence(a, b, 7);
    CHECK(mean(m.values) == doctest::Approx(0.13).epsilon(0.02 / 0.13));
    std::vector<float> v(m.values.values().begin(), m.values.values().end());
    std::sort(v.begin(), v.end());
    CHECK(v[v.size() * 95 / 100] < 0.35f);
}

TEST_CASE("simulated pair at true coherence 0.9 measures close to 0.9") {
    const int n = 200;
    sim::SceneSpec spec;
    spec.width = spec.height = n;
    spec.background_gamma = 0.9;
    const auto scene = sim::generate_scene(spec);
    const auto noisy = sim::synthesize_interferogram(scene.phase, scene.gamma_true, 99);
    const auto m = raw_coherence_map(noisy, sim::clean_interferogram(scene.phase));
    double s = 0;
    int count = 0;
    for (int y = 3; y < n - 3; ++y)
        for (int x = 3; x < n - 3; ++x) s += m.values(x, y), ++count;
    CHECK(std::abs(s / count - 0.9) < 0.05);
}

TEST_CASE("mean window coherence decreases with true coherence") {
    double previous = 2.0;
    for (double g : {1.0, 0.8, 0.5, 0.2, 0.0}) {
        sim::SceneSpec spec;
        spec.width = spec.height = 140;
        spec.background_gamma = g;
        const auto scene = sim::generate_scene(spec);
        const auto noisy = sim::synthesize_interferogram(scene.phase, scene.gamma_true, 1234);
        const double m = mean(raw_coherence_map(noisy, sim::clean_interferogram(scene.phase)).values);
        CHECK(m <= previous);
        previous = m;
    }
}

TEST_CASE("compensation phase hook rotates the cross product") {
    const auto a = noise(12, 12, 9);
    ComplexRaster b(12, 12);
    ScalarRaster ramp(12, 12);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) {
            ramp(x, y) = 0.7f * static_cast<float>(x);
            b(x, y) = a(x, y) * std::polar(1.0f, -ramp(x, y));
        }
    // without compensation the ramp lowers coherence; compensating it restores 1
    const auto plain = estimate_coherence(a, b, 5);
    const auto comp = estimate_coherence(a, b, 5, ramp);
    CHECK(plain.values(6, 6) < 0.99f);
    CHECK(comp.values(6, 6) == doctest::Approx(1.0).epsilon(1e-5));
}
