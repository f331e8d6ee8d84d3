#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seiznet/model.hpp"

namespace seiznet {

/// Weights file layout (all integers and reals little-endian):
///
///   "CNX1DWTS"                 8-byte magic
///   u32 format version         currently 1
///   u32 depth, u32 width, u32 input length
///   u32 array count
///   per array: u32 name length, name bytes, u32 rank, u64 dims[rank],
///              f64 values[product of dims]
///   u64 FNV-1a 64 checksum of every preceding byte
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

std::vector<std::uint8_t> encode_weights(const ModelParams& params);
/// Throws std::runtime_error on bad magic, version, checksum, truncation, or
/// any array whose name/shape differs from the layout implied by (D, W).
ModelParams decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_weights(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace seiznet
