#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fftcae/pipeline.hpp"

namespace fftcae {

/// Binary layout, little-endian:
///   "FCAE" | u16 version | u32 n | n bytes of JSON metadata |
///   u64 count | count f64 parameters | u32 CRC-32 of all preceding bytes
/// Parameters follow layer order: kernel (o, i, tau) and bias per convolution;
/// gamma, beta, running mean, running variance per batch norm.
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const ConvAEModel& model);
ConvAEModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ConvAEModel& model, const std::filesystem::path& path);
ConvAEModel load_model(const std::filesystem::path& path);

}  // namespace fftcae
