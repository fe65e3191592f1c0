#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "liveness/model.hpp"

namespace liveness {

// LVW1 weight file, all integers and floats little-endian:
//
//   "LVW1"                      4-byte magic
//   u32 version                 currently 1
//   u32 config_len, config      arch + decision threshold (see weights_io.cpp)
//   u32 tensor_count
//   per tensor: u32 name_len, name bytes, u32 rank, u32 dims[rank],
//               binary32 payload (row-major)
//   u32 crc32                   CRC-32 (zlib polynomial) of every preceding byte
//
// Tensors are written in layer order: trainable parameters, then buffers.

inline constexpr std::uint32_t kWeightFormatVersion = 1;

class WeightFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ChecksumError : public WeightFormatError {
public:
    using WeightFormatError::WeightFormatError;
};
class VersionError : public WeightFormatError {
public:
    using WeightFormatError::WeightFormatError;
};
class ShapeMismatchError : public WeightFormatError {
public:
    using WeightFormatError::WeightFormatError;
};

std::vector<std::uint8_t> encode_weights(const LivenessNet& net);
LivenessNet decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const LivenessNet& net, const std::filesystem::path& path);
LivenessNet load_weights(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

/// The trailing CRC of an encoded weight blob as 8 lowercase hex digits.
std::string weights_checksum(std::span<const std::uint8_t> encoded);

std::string hex32(std::uint32_t v);

}  // namespace liveness
