#include <doctest.h>

#include <filesystem>

#include "insar/pipeline.hpp"
#include "insar/weights_io.hpp"

using namespace insar;
using namespace insar::nn;

namespace {

NetworkParams<float> trained_classifier() {
    auto p = xavier_init<float>(pipeline::classifier_spec(2, 4), 3);
    auto g = zero_gradients<float>(p.spec).layers;
    for (auto& l : g) {
        for (auto& v : l.kernel) v = 0.5f;
        for (auto& v : l.bias) v = -0.25f;
    }
    adam_step(p, g, 1e-3);
    return p;
}

}  // namespace

TEST_CASE("weights roundtrip bit-exactly with and without Adam state") {
    const auto p = trained_classifier();
    const auto bytes = encode_weights(p);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CNNW");
    CHECK(decode_weights(bytes) == p);
    CHECK(encode_weights(decode_weights(bytes)) == bytes);

    const auto bare = decode_weights(encode_weights(p, {false}));
    CHECK(bare.layers == p.layers);
    CHECK(bare.spec == p.spec);
    CHECK(bare.adam.step == 0);
    for (const auto& m : bare.adam.first_moment)
        for (float v : m.kernel) CHECK(v == 0.0f);

    const auto den = xavier_init<float>(pipeline::denoiser_spec(), 1);
    CHECK(decode_weights(encode_weights(den), pipeline::denoiser_spec()) == den);
}

TEST_CASE("weights decode rejects mismatched specs and bad files") {
    const auto bytes = encode_weights(trained_classifier());
    CHECK_THROWS_AS(decode_weights(bytes, pipeline::classifier_spec(3, 4)), FormatError);
    CHECK_THROWS_AS(decode_weights(bytes, pipeline::denoiser_spec()), FormatError);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_weights(bad), FormatError);

    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_weights(extra), FormatError);
}

TEST_CASE("truncated weight file names the layer being read") {
    const auto bytes = encode_weights(trained_classifier(), {false});
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 6);
    try {
        decode_weights(cut);
        FAIL("expected a truncation error");
    } catch (const TruncationError& e) {
        CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }
    CHECK_THROWS_AS(decode_weights(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 3)), TruncationError);
}

TEST_CASE("weights save and load through a file") {
    const auto dir = std::filesystem::temp_directory_path() / "insar_weights_test";
    std::filesystem::create_directories(dir);
    const auto p = trained_classifier();
    save_weights(dir / "w.cnnw", p);
    CHECK(load_weights(dir / "w.cnnw") == p);
    CHECK(load_weights(dir / "w.cnnw", p.spec) == p);
    CHECK_THROWS_AS(load_weights(dir / "none.cnnw"), IoError);
    std::filesystem::remove_all(dir);
}
