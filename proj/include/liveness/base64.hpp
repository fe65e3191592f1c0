#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace liveness {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Standard alphabet, padding optional, whitespace ignored. Throws
/// std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace liveness
