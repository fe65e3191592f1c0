#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "liveness/dataset.hpp"

namespace liveness {

/// Per-subject appearance parameters of a procedural face.
struct SubjectStyle {
    std::string id;
    double skin[3];
    double hair[3];
    double lip[3];
    double iris[3];
    double aspect;       // face height / width
    double eye_spacing;  // fraction of face half-width
    double eye_height;   // fraction of face half-height above centre
    double eye_size;
    double mouth_width;
    double hair_line;    // fraction of face half-height covered by hair
    double room[2][3];   // background palette of the subject's surroundings
};

SubjectStyle make_subject(const std::string& id, std::uint64_t seed);

/// A rendered camera frame and the tight box around the face.
struct SynthFrame {
    Image frame;
    BBox face;
};

inline constexpr int kSynthFrameSize = 96;

/// Renders one capture. Bona fide (AttackType::None): live face on a room
/// background. Print attacks: the face printed on paper (white margin,
/// halftone, compressed contrast); glossy prints add saturation and a
/// specular streak. Video replay: screen with dark bezel, colour cast and
/// moire interference. Masks: the printed face wrapped around a head form,
/// with a paper edge following the face outline.
SynthFrame render_frame(const SubjectStyle& subject, AttackType attack, Distance distance, Rng& rng,
                        int frame_size = kSynthFrameSize);

struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t subjects = 20;
    std::size_t per_class = 25;  // frames per subject per class
    double padding_fraction = kDefaultPadding;
    SplitRatios ratios{};
};

/// Writes a complete corpus (tight and padded crop per frame) under `root`
/// and returns its manifest. Byte-identical for a fixed config.
CorpusManifest synth_corpus(const std::filesystem::path& root, const SynthConfig& config);

}  // namespace liveness
