#pragma once

#include <string>

#include "liveness/image.hpp"
#include "liveness/tensor.hpp"

namespace liveness {

/// Pixel rectangle in frame coordinates.
struct BBox {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool valid() const { return width > 0 && height > 0; }
    bool intersects(int frame_width, int frame_height) const {
        return x < frame_width && y < frame_height && x + width > 0 && y + height > 0;
    }
    std::string to_string() const;

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Parses "x,y,w,h".
BBox parse_bbox(const std::string& text);

inline constexpr int kFaceSize = 32;
inline constexpr double kDefaultPadding = 0.3;

/// Grows `box` by padding * max(width, height) on every side (outer edges
/// rounded outward) and clamps the result to the frame.
BBox expand_box(const BBox& box, double padding_fraction, int frame_width, int frame_height);

/// Bilinear resize with half-pixel sample centers.
Image resize_bilinear(const Image& src, int width, int height);

/// Crop of the padded, clamped box resized to size x size.
/// Throws ConfigError for an invalid box or one entirely outside the frame.
Image crop_face(const Image& frame, const BBox& box, double padding_fraction, int size = kFaceSize);

enum class InputScale {
    Unit,  // pixel / 255, values in [0, 1]
    Raw,   // pixel value as-is, [0, 255]
};

/// HWC uint8 -> CHW float tensor.
Tensor32 normalize_face(const Image& face, InputScale scale = InputScale::Unit);

}  // namespace liveness
