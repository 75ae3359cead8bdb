#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "insar/nn.hpp"

namespace insar::nn {

// "CNNW" weight file, all little-endian:
//
//   magic        "CNNW"
//   version      u32 (= 1)
//   layer_count  u32
//   per layer:   kind u8, activation u8, in_channels u32, out_channels u32
//   has_adam     u8
//   learning_rate f64
//   adam_step    u64                       (only when has_adam)
//   per layer:   kernel, pointwise, bias   (u32 count, then count x f32)
//                + first/second moments in the same order (only when has_adam)

struct WeightCodecOptions {
    bool include_adam_state = true;
};

std::vector<std::uint8_t> encode_weights(const NetworkParams<float>& params,
                                         WeightCodecOptions options = {});

/// Reads any well-formed CNNW blob. Truncated input raises TruncationError
/// naming the layer index being read.
NetworkParams<float> decode_weights(std::span<const std::uint8_t> bytes);

/// As decode_weights, additionally requiring the stored layer table to equal
/// `expected`; a mismatch raises FormatError.
NetworkParams<float> decode_weights(std::span<const std::uint8_t> bytes, const NetworkSpec& expected);

void save_weights(const std::filesystem::path& path, const NetworkParams<float>& params,
                  WeightCodecOptions options = {});
NetworkParams<float> load_weights(const std::filesystem::path& path);
NetworkParams<float> load_weights(const std::filesystem::path& path, const NetworkSpec& expected);

}  // namespace insar::nn
