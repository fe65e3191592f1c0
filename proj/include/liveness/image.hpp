#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "liveness/errors.hpp"

namespace liveness {

/// 8-bit interleaved RGB image, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

class ImageDecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decodes PNG or JPEG (sniffed from the leading bytes) to RGB.
Image decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Image& image);
std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality = 90);

Image read_image(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace liveness
