#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "crashforge/network.hpp"

namespace crashforge {

/// Binary weight file, all integers and floats little-endian:
///
///   "CFW1"                      magic
///   u64  spec hash              NetworkSpec::hash()
///   u32  layer count
///   per layer: u32 kind, u32 out, u32 in, u32 kernel, u32 stride
///   per layer: f32 weights[out*in*kernel*kernel], f32 biases[out]
///   u64  FNV-1a of every preceding byte
std::string encode_checkpoint(const Weights<float>& weights);

/// Throws ParseError (bad magic or truncation), ChecksumMismatch,
/// SpecHashMismatch (file written for another spec) or ShapeMismatch.
Weights<float> decode_checkpoint(std::string_view bytes, const NetworkSpec& expected,
                                 std::string_view origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const Weights<float>& weights);
Weights<float> load_checkpoint(const std::filesystem::path& path,
                               const NetworkSpec& expected = NetworkSpec::standard());

}  // namespace crashforge
