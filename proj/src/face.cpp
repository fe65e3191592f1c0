#include "liveness/face.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace liveness {

std::string BBox::to_string() const {
    std::ostringstream os;
    os << x << ',' << y << ',' << width << ',' << height;
    return os.str();
}

BBox parse_bbox(const std::string& text) {
    BBox b;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream is(text);
    if (!(is >> b.x >> c1 >> b.y >> c2 >> b.width >> c3 >> b.height) || c1 != ',' || c2 != ',' || c3 != ',') {
        throw ConfigError("bbox must be 'x,y,w,h', got '" + text + "'");
    }
    std::string rest;
    if (is >> rest) throw ConfigError("bbox must be 'x,y,w,h', got '" + text + "'");
    return b;
}

BBox expand_box(const BBox& box, double padding_fraction, int frame_width, int frame_height) {
    if (!box.valid()) throw ConfigError("bbox must have positive width and height: " + box.to_string());
    if (!(padding_fraction >= 0.0)) throw ConfigError("padding fraction must be >= 0");
    if (!box.intersects(frame_width, frame_height)) {
        throw ConfigError("bbox " + box.to_string() + " lies outside the " + std::to_string(frame_width) + "x" +
                          std::to_string(frame_height) + " frame");
    }
    const double pad = padding_fraction * std::max(box.width, box.height);
    const int x0 = std::max(0, static_cast<int>(std::floor(box.x - pad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(box.y - pad)));
    const int x1 = std::min(frame_width, static_cast<int>(std::ceil(box.x + box.width + pad)));
    const int y1 = std::min(frame_height, static_cast<int>(std::ceil(box.y + box.height + pad)));
    return {x0, y0, x1 - x0, y1 - y0};
}

Image resize_bilinear(const Image& src, int width, int height) {
    Image out(width, height);
    const double sx = static_cast<double>(src.width) / width;
    const double sy = static_cast<double>(src.height) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = src.at(x0, y0, c) * (1 - wx) + src.at(x1, y0, c) * wx;
                const double bottom = src.at(x0, y1, c) * (1 - wx) + src.at(x1, y1, c) * wx;
                const double v = top * (1 - wy) + bottom * wy;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

Image crop_face(const Image& frame, const BBox& box, double padding_fraction, int size) {
    const BBox r = expand_box(box, padding_fraction, frame.width, frame.height);
    Image region(r.width, r.height);
    for (int y = 0; y < r.height; ++y) {
        const auto* src = frame.pixels.data() + (static_cast<std::size_t>(r.y + y) * frame.width + r.x) * 3;
        std::copy(src, src + static_cast<std::size_t>(r.width) * 3,
                  region.pixels.data() + static_cast<std::size_t>(y) * r.width * 3);
    }
    if (r.width == size && r.height == size) return region;
    return resize_bilinear(region, size, size);
}

Tensor32 normalize_face(const Image& face, InputScale scale) {
    Tensor32 t({3, face.height, face.width});
    const Index plane = static_cast<Index>(face.width) * face.height;
    for (Index i = 0; i < plane; ++i) {
        for (Index c = 0; c < 3; ++c) {
            const float v = static_cast<float>(face.pixels[static_cast<std::size_t>(i * 3 + c)]);
            t[c * plane + i] = scale == InputScale::Unit ? v / 255.0f : v;
        }
    }
    return t;
}

}  // namespace liveness
