#include <doctest.h>

#include <random>

#include "insar/mrf.hpp"
#include "oracles.hpp"

using namespace insar;

namespace {

LabelField field(int w, int h, std::vector<std::uint8_t> v) { return LabelField(w, h, std::move(v)); }

LabelField random_field(std::mt19937_64& rng, int w, int h) {
    LabelField f(w, h);
    for (auto& v : f.values()) v = static_cast<std::uint8_t>(rng() & 1u);
    return f;
}

// Energy from the definition, independent of mrf_energy.
double hand_energy(const LabelField& p, const LabelField& s, double alpha) {
    double e = 0;
    for (std::size_t i = 0; i < p.size(); ++i) e += p[i] != s[i];
    for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x) {
            if (x + 1 < s.width() && s(x, y) != s(x + 1, y)) e += alpha;
            if (y + 1 < s.height() && s(x, y) != s(x, y + 1)) e += alpha;
        }
    return e;
}

}  // namespace

TEST_CASE("otsu on two clusters returns the midpoint of the optimal plateau") {
    ScalarRaster r(10, 10);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i % 2 ? 0.8f : 0.2f;
    const double t = otsu_threshold(r);
    CHECK(t > 0.2);
    CHECK(t <= 0.8);
    CHECK(t == doctest::Approx(0.5).epsilon(0.01));
    const auto cuts = oracle::otsu_argmax_cuts(std::vector<float>(r.values().begin(), r.values().end()));
    const int k = static_cast<int>(std::lround(t * 256));
    CHECK(std::find(cuts.begin(), cuts.end(), k) != cuts.end());
}

TEST_CASE("otsu separates a binary image") {
    ScalarRaster r(4, 1, 0.0f);
    r[2] = 1.0f;
    const double t = otsu_threshold(r);
    CHECK(t > 0.0);
    CHECK(t < 1.0);
    CHECK_THROWS_AS(otsu_threshold(ScalarRaster(3, 3, 0.4f)), DegenerateInputError);
    ScalarRaster bad(2, 1, 0.5f);
    bad[0] = 1.5f;
    CHECK_THROWS_AS(otsu_threshold(bad), ParameterError);
}

TEST_CASE("otsu picks a maximizing cut on random data") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int t = 0; t < 40; ++t) {
        ScalarRaster r(8, 8);
        for (auto& v : r.values()) v = u(rng) * u(rng);
        const int k = static_cast<int>(std::lround(otsu_threshold(r) * 256));
        const auto cuts = oracle::otsu_argmax_cuts(std::vector<float>(r.values().begin(), r.values().end()));
        CHECK(std::find(cuts.begin(), cuts.end(), k) != cuts.end());
    }
}

TEST_CASE("initial labels use a strict threshold") {
    CHECK(initialize_labels(ScalarRaster(3, 2, 1.0f), 0.6) == LabelField(3, 2, 1));
    CHECK(initialize_labels(ScalarRaster(3, 2, 0.6f), 0.6) == LabelField(3, 2, 0));
    ScalarRaster r(2, 1);
    r[0] = 0.7f;
    r[1] = 0.5f;
    CHECK(initialize_labels(CoherenceMap{r, 7}, 0.6) == field(2, 1, {1, 0}));
}

TEST_CASE("mrf energy examples") {
    const auto p = field(2, 2, {1, 0, 0, 0});
    CHECK(mrf_energy(p, p, 2.5) == 5.0);
    const LabelField ones(2, 2, 1);
    CHECK(mrf_energy(ones, ones, 7.0) == 0.0);
    CHECK(mrf_energy(p, LabelField(2, 2, 1), 3.0) == 3.0);
    CHECK(mrf_energy(p, complement(p), 0.0) == 4.0);
    CHECK(neighbor_disagreements(p) == 2);
    CHECK_THROWS_AS(mrf_energy(p, LabelField(3, 2), 1.0), ParameterError);
}

TEST_CASE("mrf energy matches the definition on random fields") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const int w = 1 + static_cast<int>(rng() % 6), h = 1 + static_cast<int>(rng() % 6);
        const auto p = random_field(rng, w, h);
        const auto s = random_field(rng, w, h);
        const double alpha = 0.25 * static_cast<double>(rng() % 20);
        CHECK(mrf_energy(p, s, alpha) == doctest::Approx(hand_energy(p, s, alpha)));
    }
}

TEST_CASE("brute force examples") {
    CHECK(brute_force_mrf(field(1, 1, {1}), 9.0) == field(1, 1, {1}));
    CHECK(brute_force_mrf(field(2, 1, {1, 0}), 0.4) == field(2, 1, {1, 0}));
    const auto s = brute_force_mrf(field(2, 1, {1, 0}), 1.5);
    CHECK(s[0] == s[1]);
    // tie between [0,0] and [1,1]: lexicographically smallest wins
    CHECK(s == field(2, 1, {0, 0}));
    CHECK_THROWS_AS(brute_force_mrf(LabelField(5, 5), 1.0), ParameterError);
}

TEST_CASE("graph cut with alpha 0 copies the initialization") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto p = random_field(rng, 7, 5);
        CHECK(minimize_mrf(p, 0.0) == p);
    }
}

TEST_CASE("graph cut with huge alpha returns the majority label") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        const int w = 1 + static_cast<int>(rng() % 4), h = 1 + static_cast<int>(rng() % 4);
        const auto p = random_field(rng, w, h);
        const auto s = minimize_mrf(p, static_cast<double>(w * h) + 1.0);
        std::size_t ones = 0;
        for (auto v : p.values()) ones += v;
        if (2 * ones == p.size()) {
            CHECK(neighbor_disagreements(s) == 0);
        } else {
            CHECK(s == LabelField(w, h, 2 * ones > p.size() ? 1 : 0));
        }
        CHECK(mrf_energy(p, s, w * h + 1.0) == mrf_energy(p, brute_force_mrf(p, w * h + 1.0), w * h + 1.0));
    }
}

TEST_CASE("graph cut is exact on random 3x3 fields") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        const auto p = random_field(rng, 3, 3);
        double best = 1e300;
        for (unsigned m = 0; m < 512; ++m) {
            LabelField s(3, 3);
            for (int i = 0; i < 9; ++i) s[static_cast<std::size_t>(i)] = (m >> i) & 1u;
            best = std::min(best, hand_energy(p, s, 2.5));
        }
        CHECK(mrf_energy(p, minimize_mrf(p, 2.5), 2.5) == best);
    }
}

TEST_CASE("graph cut properties on random fields") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 60; ++t) {
        const int w = 1 + static_cast<int>(rng() % 12), h = 1 + static_cast<int>(rng() % 12);
        const auto p = random_field(rng, w, h);
        for (double alpha : {0.3, 1.0, 2.5}) {
            const auto s = minimize_mrf(p, alpha);
            CHECK(mrf_energy(p, s, alpha) <= mrf_energy(p, p, alpha));
            const auto sc = minimize_mrf(complement(p), alpha);
            CHECK(mrf_energy(complement(p), sc, alpha) ==
                  doctest::Approx(mrf_energy(complement(p), complement(s), alpha)));
        }
    }
}

TEST_CASE("graph cut is deterministic and removes isolated pixels") {
    LabelField p(9, 9, 0);
    p(4, 4) = 1;
    p(0, 8) = 1;
    CHECK(minimize_mrf(p, 2.5) == LabelField(9, 9, 0));
    std::mt19937_64 rng(8);
    const auto q = random_field(rng, 30, 20);
    CHECK(minimize_mrf(q, 1.3) == minimize_mrf(q, 1.3));
}

TEST_CASE("max flow on a small textbook network") {
    // s -> a (3), s -> b (2), a -> b (1), a -> t (2), b -> t (3): max flow 5
    MaxFlowGraph g(2);
    g.add_terminal_weights(0, 3, 2);
    g.add_terminal_weights(1, 2, 3);
    g.add_edge(0, 1, 1, 0);
    CHECK(g.solve() == doctest::Approx(5.0));
}

TEST_CASE("mrf config validation and label conversion") {
    CHECK_THROWS_AS(validate(MrfConfig{-1.0, 0.6}), ParameterError);
    CHECK_THROWS_AS(validate(MrfConfig{1.0, 1.2}), ParameterError);
    CHECK_NOTHROW(validate(MrfConfig{}));
    const auto p = field(3, 1, {1, 0, 1});
    CHECK(labels_from_scalar(to_scalar(p)) == p);
    ScalarRaster bad(1, 1, 0.5f);
    CHECK_THROWS_AS(labels_from_scalar(bad), DataError);
}
