#include "liveness/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace liveness {

namespace {

constexpr double kPi = std::numbers::pi;

/// Float RGB working buffer, values nominally in [0, 255].
struct Canvas {
    int width;
    int height;
    std::vector<double> px;

    Canvas(int w, int h) : width(w), height(h), px(static_cast<std::size_t>(w) * h * 3, 0.0) {}

    double* at(int x, int y) { return px.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const double* at(int x, int y) const { return px.data() + (static_cast<std::size_t>(y) * width + x) * 3; }

    void set(int x, int y, const double c[3]) {
        double* p = at(x, y);
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    Image to_image() const {
        Image img(width, height);
        for (std::size_t i = 0; i < px.size(); ++i) {
            img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(px[i]), 0L, 255L));
        }
        return img;
    }
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double clamp255(double v) { return std::clamp(v, 0.0, 255.0); }

void lerp_color(const double a[3], const double b[3], double t, double out[3]) {
    for (int c = 0; c < 3; ++c) out[c] = a[c] + (b[c] - a[c]) * t;
}

struct FaceGeom {
    double cx, cy, rx, ry;
};

// Room-like background: vertical gradient, a few furniture rectangles, a
// soft light blob.
void paint_scene(Canvas& cv, const double palette[2][3], Rng& rng) {
    double top[3], bottom[3];
    for (int c = 0; c < 3; ++c) {
        top[c] = clamp255(palette[0][c] + rng.uniform(-25, 25));
        bottom[c] = clamp255(palette[1][c] + rng.uniform(-25, 25));
    }
    for (int y = 0; y < cv.height; ++y) {
        double col[3];
        lerp_color(top, bottom, static_cast<double>(y) / (cv.height - 1), col);
        for (int x = 0; x < cv.width; ++x) cv.set(x, y, col);
    }
    const int rects = 2 + static_cast<int>(rng.below(3));
    for (int r = 0; r < rects; ++r) {
        const int w = 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cv.width / 2)));
        const int h = 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cv.height / 2)));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(cv.width)));
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(cv.height)));
        double col[3];
        const auto& base = palette[rng.below(2)];
        for (int c = 0; c < 3; ++c) col[c] = clamp255(base[c] + rng.uniform(-60, 60));
        for (int y = y0; y < std::min(cv.height, y0 + h); ++y) {
            for (int x = x0; x < std::min(cv.width, x0 + w); ++x) cv.set(x, y, col);
        }
    }
    const double lx = rng.uniform(0, cv.width), ly = rng.uniform(0, cv.height * 0.5);
    const double lr = rng.uniform(8, 24), strength = rng.uniform(10, 50);
    for (int y = 0; y < cv.height; ++y) {
        for (int x = 0; x < cv.width; ++x) {
            const double d2 = ((x - lx) * (x - lx) + (y - ly) * (y - ly)) / (lr * lr);
            const double add = strength * std::exp(-d2);
            double* p = cv.at(x, y);
            for (int c = 0; c < 3; ++c) p[c] = clamp255(p[c] + add);
        }
    }
}

bool in_ellipse(double u, double v, double a, double b) { return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0; }

// Procedural face: hair cap, shaded skin oval, eyes, brows, nose shadow, mouth.
void paint_face(Canvas& cv, const SubjectStyle& s, const FaceGeom& g, double gain, double light) {
    const int x0 = std::max(0, static_cast<int>(g.cx - g.rx * 1.3));
    const int x1 = std::min(cv.width - 1, static_cast<int>(g.cx + g.rx * 1.3) + 1);
    const int y0 = std::max(0, static_cast<int>(g.cy - g.ry * 1.3));
    const int y1 = std::min(cv.height - 1, static_cast<int>(g.cy + g.ry * 1.3) + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double u = (x - g.cx) / g.rx;
            const double v = (y - g.cy) / g.ry;
            const double r2 = u * u + v * v;
            double col[3];
            bool painted = false;
            if (in_ellipse(u, v + 0.1, 1.12, 1.08) && v < 0.2) {
                for (int c = 0; c < 3; ++c) col[c] = s.hair[c] * gain * (0.85 + 0.15 * std::cos(7 * u + 3 * v));
                painted = true;
            }
            if (r2 <= 1.0) {
                const double shade = 0.72 + 0.28 * std::sqrt(1.0 - r2) + light * u * 0.12;
                for (int c = 0; c < 3; ++c) col[c] = s.skin[c] * shade * gain;
                if (v < -1.0 + s.hair_line && std::abs(u) < 0.95) {
                    for (int c = 0; c < 3; ++c) col[c] = s.hair[c] * gain;
                }
                // eyes
                for (double side : {-1.0, 1.0}) {
                    const double eu = u - side * s.eye_spacing;
                    const double ev = (v + s.eye_height) * g.ry / g.rx;
                    if (in_ellipse(eu, ev, s.eye_size, s.eye_size * 0.55)) {
                        const double ir = std::sqrt(eu * eu + ev * ev);
                        if (ir < s.eye_size * 0.22) {
                            col[0] = col[1] = col[2] = 15 * gain;
                        } else if (ir < s.eye_size * 0.5) {
                            for (int c = 0; c < 3; ++c) col[c] = s.iris[c] * gain;
                        } else {
                            col[0] = col[1] = col[2] = 235 * gain;
                        }
                    }
                    const double bv = ev + s.eye_size * 0.9;
                    if (std::abs(bv) < 0.035 && std::abs(eu) < s.eye_size * 1.1) {
                        for (int c = 0; c < 3; ++c) col[c] = s.hair[c] * 0.8 * gain;
                    }
                }
                // nose shadow
                if (in_ellipse(u - 0.06, v - 0.12, 0.09, 0.16)) {
                    for (double& c : col) c *= 0.86;
                }
                // mouth
                if (in_ellipse(u, v - 0.52, s.mouth_width, 0.075)) {
                    for (int c = 0; c < 3; ++c) col[c] = s.lip[c] * gain;
                }
                painted = true;
            }
            if (painted) {
                for (double& c : col) c = clamp255(c);
                cv.set(x, y, col);
            }
        }
    }
}

struct PrintStyle {
    double lift;       // black level added
    double contrast;   // multiplicative contrast
    double saturation; // 1 = unchanged
    double dot_amp;    // halftone modulation depth
    double dot_period;
    double tint[3];
};

PrintStyle print_style(bool glossy, Rng& rng) {
    if (glossy) {
        return {rng.uniform(8, 20), rng.uniform(0.82, 0.9), rng.uniform(1.1, 1.25), rng.uniform(0.08, 0.12),
                rng.uniform(2.8, 3.4), {2, 0, -2}};
    }
    return {rng.uniform(28, 45), rng.uniform(0.62, 0.75), rng.uniform(0.6, 0.8), rng.uniform(0.12, 0.18),
            rng.uniform(2.8, 3.4), {6, 4, -6}};
}

void apply_print(Canvas& cv, const PrintStyle& st) {
    for (int y = 0; y < cv.height; ++y) {
        for (int x = 0; x < cv.width; ++x) {
            double* p = cv.at(x, y);
            const double grey = (p[0] + p[1] + p[2]) / 3.0;
            const double screen = std::cos(2 * kPi * x / st.dot_period) * std::cos(2 * kPi * y / st.dot_period);
            const double dots = 1.0 - st.dot_amp + st.dot_amp * screen;
            // paper showing between ink dots keeps the screen visible in dark areas
            const double paper = 40.0 * st.dot_amp * screen;
            for (int c = 0; c < 3; ++c) {
                const double sat = grey + (p[c] - grey) * st.saturation;
                p[c] = clamp255((st.lift + st.contrast * sat + st.tint[c]) * dots + paper);
            }
        }
    }
}

void apply_screen(Canvas& cv, Rng& rng) {
    const double theta = rng.uniform(0, kPi);
    const double period = rng.uniform(3.5, 5.0);
    const double amp = rng.uniform(10, 18);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double boost = rng.uniform(1.0, 1.12);
    for (int y = 0; y < cv.height; ++y) {
        for (int x = 0; x < cv.width; ++x) {
            double* p = cv.at(x, y);
            const double moire = amp * std::sin(2 * kPi * (x * ct + y * st) / period);
            const double scan = (y % 2 == 0) ? 1.0 : 0.92;
            p[0] = clamp255((p[0] * 0.86 * boost + moire) * scan);
            p[1] = clamp255((p[1] * 0.96 * boost + moire) * scan);
            p[2] = clamp255((p[2] * 1.06 * boost + 14 + moire) * scan);
        }
    }
}

void add_streak(Canvas& cv, Rng& rng, double strength) {
    const double angle = rng.uniform(0.6, 1.2);
    const double offset = rng.uniform(-0.3, 0.3) * cv.width;
    const double width = rng.uniform(2.5, 5.0);
    const double nx = std::cos(angle), ny = std::sin(angle);
    for (int y = 0; y < cv.height; ++y) {
        for (int x = 0; x < cv.width; ++x) {
            const double d = (x - cv.width / 2.0) * nx + (y - cv.height / 2.0) * ny - offset;
            const double a = strength * std::exp(-(d * d) / (width * width));
            double* p = cv.at(x, y);
            for (int c = 0; c < 3; ++c) p[c] = clamp255(p[c] + a);
        }
    }
}

void add_sensor_noise(Canvas& cv, Rng& rng, double sigma) {
    for (double& v : cv.px) v = clamp255(v + rng.normal(0.0, sigma));
}

FaceGeom place_face(const SubjectStyle& s, Distance d, int size, Rng& rng) {
    const double scale = size / 96.0;
    const double rx = (d == Distance::Close ? rng.uniform(21, 25) : rng.uniform(12, 15.5)) * scale;
    const double ry = std::min(rx * s.aspect, size * 0.38);
    return {size / 2.0 + rng.uniform(-6, 6) * scale, size / 2.0 + rng.uniform(-4, 5) * scale, rx, ry};
}

BBox face_box(const FaceGeom& g, int size) {
    int x0 = static_cast<int>(std::floor(g.cx - g.rx));
    int y0 = static_cast<int>(std::floor(g.cy - g.ry));
    int x1 = static_cast<int>(std::ceil(g.cx + g.rx));
    int y1 = static_cast<int>(std::ceil(g.cy + g.ry));
    x0 = std::max(0, x0);
    y0 = std::max(0, y0);
    x1 = std::min(size, x1);
    y1 = std::min(size, y1);
    return {x0, y0, x1 - x0, y1 - y0};
}

// Copies `content` into `frame` inside the rectangle [x0,x1) x [y0,y1),
// framing it with a border of the given colour and thickness.
void composite_media(Canvas& frame, const Canvas& content, int x0, int y0, int x1, int y1, int border,
                     const double border_color[3], Rng& rng) {
    for (int y = std::max(0, y0); y < std::min(frame.height, y1); ++y) {
        for (int x = std::max(0, x0); x < std::min(frame.width, x1); ++x) {
            const bool edge = x < x0 + border || x >= x1 - border || y < y0 + border || y >= y1 - border;
            if (edge) {
                double col[3];
                const double n = rng.normal(0.0, 2.0);
                for (int c = 0; c < 3; ++c) col[c] = clamp255(border_color[c] + n);
                frame.set(x, y, col);
            } else {
                frame.set(x, y, content.at(x, y));
            }
        }
    }
}

}  // namespace

SubjectStyle make_subject(const std::string& id, std::uint64_t seed) {
    Rng rng(Rng::mix(seed, fnv1a(id)));
    SubjectStyle s{};
    s.id = id;
    static constexpr double light[3] = {236, 200, 176};
    static constexpr double dark[3] = {105, 70, 50};
    const double tone = rng.uniform();
    for (int c = 0; c < 3; ++c) s.skin[c] = light[c] + (dark[c] - light[c]) * tone + rng.uniform(-8, 8);
    const bool fair_hair = rng.bernoulli(0.2);
    for (int c = 0; c < 3; ++c) {
        s.hair[c] = fair_hair ? rng.uniform(150, 200) - 30 * c : rng.uniform(15, 80) - 5 * c;
        s.lip[c] = s.skin[c] * (c == 0 ? 0.82 : 0.55);
        s.iris[c] = rng.uniform(30, 140);
    }
    s.aspect = rng.uniform(1.15, 1.4);
    s.eye_spacing = rng.uniform(0.34, 0.48);
    s.eye_height = rng.uniform(0.12, 0.3);
    s.eye_size = rng.uniform(0.13, 0.19);
    s.mouth_width = rng.uniform(0.28, 0.46);
    s.hair_line = rng.uniform(0.3, 0.55);
    for (auto& col : s.room) {
        for (double& c : col) c = rng.uniform(50, 200);
    }
    return s;
}

SynthFrame render_frame(const SubjectStyle& subject, AttackType attack, Distance distance, Rng& rng,
                        int frame_size) {
    Canvas frame(frame_size, frame_size);
    paint_scene(frame, subject.room, rng);
    const FaceGeom g = place_face(subject, distance, frame_size, rng);
    const double gain = rng.uniform(0.75, 1.2);
    const double light = rng.uniform(-1, 1);

    switch (attack) {
        case AttackType::None:
            paint_face(frame, subject, g, gain, light);
            break;

        case AttackType::NormalPrint:
        case AttackType::GlossyPrint:
        case AttackType::VideoReplay: {
            // The spoof medium shows an earlier capture of the subject in a
            // different place; it occupies a rectangle around the face.
            Canvas content(frame_size, frame_size);
            double other_room[2][3];
            for (int k = 0; k < 2; ++k) {
                for (int c = 0; c < 3; ++c) other_room[k][c] = clamp255(subject.room[1 - k][c] + rng.uniform(-40, 40));
            }
            paint_scene(content, other_room, rng);
            paint_face(content, subject, g, rng.uniform(0.8, 1.2), rng.uniform(-1, 1));
            const double side = std::max(g.rx, g.ry) * 2;
            const double ml = rng.uniform(0.18, 0.45) * side, mr = rng.uniform(0.18, 0.45) * side;
            const double mt = rng.uniform(0.18, 0.45) * side, mb = rng.uniform(0.18, 0.45) * side;
            const int x0 = static_cast<int>(g.cx - g.rx - ml), x1 = static_cast<int>(g.cx + g.rx + mr);
            const int y0 = static_cast<int>(g.cy - g.ry - mt), y1 = static_cast<int>(g.cy + g.ry + mb);
            if (attack == AttackType::VideoReplay) {
                apply_screen(content, rng);
                add_streak(content, rng, rng.uniform(30, 60));
                const double bezel[3] = {18, 18, 22};
                composite_media(frame, content, x0, y0, x1, y1, 4 + static_cast<int>(rng.below(4)), bezel, rng);
            } else {
                const bool glossy = attack == AttackType::GlossyPrint;
                apply_print(content, print_style(glossy, rng));
                if (glossy) add_streak(content, rng, rng.uniform(50, 90));
                const double paper[3] = {glossy ? 246.0 : 236.0, glossy ? 246.0 : 233.0, glossy ? 244.0 : 222.0};
                composite_media(frame, content, x0, y0, x1, y1, 3 + static_cast<int>(rng.below(4)), paper, rng);
            }
            break;
        }

        case AttackType::NormalPrintMask:
        case AttackType::GlossyPrintMask: {
            // Printed face wrapped around a head form: cylindrical warp,
            // curvature shading, paper rim along the face outline.
            const bool glossy = attack == AttackType::GlossyPrintMask;
            const double head[3] = {rng.uniform(150, 185), rng.uniform(140, 170), rng.uniform(130, 155)};
            for (int y = static_cast<int>(g.cy + g.ry * 0.8); y < frame_size; ++y) {
                for (int x = static_cast<int>(g.cx - g.rx * 0.45); x < static_cast<int>(g.cx + g.rx * 0.45); ++x) {
                    if (x >= 0 && x < frame_size) frame.set(x, y, head);
                }
            }
            Canvas flat(frame_size, frame_size);
            const double paper[3] = {glossy ? 246.0 : 236.0, glossy ? 246.0 : 233.0, glossy ? 244.0 : 222.0};
            for (int y = 0; y < frame_size; ++y) {
                for (int x = 0; x < frame_size; ++x) flat.set(x, y, paper);
            }
            paint_face(flat, subject, g, rng.uniform(0.8, 1.2), 0.0);
            apply_print(flat, print_style(glossy, rng));
            const double rim = rng.uniform(1.12, 1.3);
            for (int y = 0; y < frame_size; ++y) {
                for (int x = 0; x < frame_size; ++x) {
                    const double u = (x - g.cx) / (g.rx * rim);
                    const double v = (y - g.cy) / (g.ry * rim);
                    const double r2 = u * u + v * v;
                    if (r2 > 1.0) {
                        if (u * u / 1.44 + v * v / 1.2 <= 1.0) frame.set(x, y, head);
                        continue;
                    }
                    const double us = (2.0 / kPi) * std::asin(std::clamp(u, -1.0, 1.0));
                    const int sx = std::clamp(static_cast<int>(std::lround(g.cx + us * g.rx * rim)), 0, frame_size - 1);
                    const double shade = 0.62 + 0.38 * std::sqrt(std::max(0.0, 1.0 - u * u));
                    const double* src = flat.at(sx, y);
                    double col[3];
                    for (int c = 0; c < 3; ++c) col[c] = clamp255(src[c] * shade * gain);
                    frame.set(x, y, col);
                }
            }
            if (glossy) add_streak(frame, rng, rng.uniform(40, 70));
            break;
        }
    }
    add_sensor_noise(frame, rng, 2.5);
    return {frame.to_image(), face_box(g, frame_size)};
}

CorpusManifest synth_corpus(const std::filesystem::path& root, const SynthConfig& config) {
    if (config.subjects == 0) throw ConfigError("synth: need at least one subject");
    if (config.per_class == 0) throw ConfigError("synth: need at least one image per class");

    const int digits = config.subjects > 100 ? 3 : 2;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < config.subjects; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "s%0*zu", digits, i);
        ids.emplace_back(buf);
    }
    const SubjectSplit split = split_by_subject(ids, config.ratios, config.seed);

    CorpusManifest m;
    m.root = root;
    for (const auto& [list, s] : {std::pair{&split.train, Split::Train}, std::pair{&split.dev, Split::Dev},
                                  std::pair{&split.test, Split::Test}}) {
        for (const auto& id : *list) m.subject_split[id] = s;
    }

    std::filesystem::create_directories(root);
    for (const auto& id : ids) {
        const SubjectStyle style = make_subject(id, config.seed);
        const std::string split_name(to_string(m.subject_split.at(id)));
        Rng rng(Rng::mix(config.seed, fnv1a(id) ^ 0xF00D));
        for (Label label : {Label::BonaFide, Label::Attack}) {
            for (std::size_t i = 0; i < config.per_class; ++i) {
                const AttackType attack = label == Label::BonaFide ? AttackType::None : kAttackTypes[i % kAttackTypes.size()];
                const Distance distance = (i % 3 == 2) ? Distance::Close : Distance::Mid;
                const SynthFrame f = render_frame(style, attack, distance, rng);
                const std::filesystem::path dir =
                    std::filesystem::path(split_name) / id / std::string(to_string(label)) / std::string(to_string(attack));
                std::filesystem::create_directories(root / dir);
                for (bool padded : {false, true}) {
                    const Image crop = crop_face(f.frame, f.face, padded ? config.padding_fraction : 0.0);
                    char name[32];
                    std::snprintf(name, sizeof name, "%03zu_%s.png", i, padded ? "padded" : "tight");
                    const std::string rel = (dir / name).generic_string();
                    write_png(crop, root / rel);
                    m.records.push_back({rel, label, attack, id, distance, padded});
                }
            }
        }
    }
    write_manifest(m);
    return m;
}

}  // namespace liveness
