#pragma once

#include <array>
#include <string>
#include <string_view>

#include "liveness/errors.hpp"

namespace liveness {

/// Class index order used by the network output: column 0 is bona fide.
enum class Label { BonaFide = 0, Attack = 1 };

enum class AttackType { None, NormalPrint, GlossyPrint, VideoReplay, NormalPrintMask, GlossyPrintMask };

enum class Distance { Mid, Close };

inline constexpr std::array<AttackType, 5> kAttackTypes = {
    AttackType::NormalPrint, AttackType::GlossyPrint, AttackType::VideoReplay,
    AttackType::NormalPrintMask, AttackType::GlossyPrintMask};

/// Decision rule shared by prediction and evaluation: a score equal to the
/// threshold is accepted as bona fide.
inline bool decide_bona_fide(double score, double threshold) { return score >= threshold; }

inline std::string_view to_string(Label l) { return l == Label::BonaFide ? "bona_fide" : "attack"; }

inline std::string_view to_string(AttackType a) {
    switch (a) {
        case AttackType::None: return "none";
        case AttackType::NormalPrint: return "normal_print";
        case AttackType::GlossyPrint: return "glossy_print";
        case AttackType::VideoReplay: return "video_replay";
        case AttackType::NormalPrintMask: return "normal_print_mask";
        case AttackType::GlossyPrintMask: return "glossy_print_mask";
    }
    return "?";
}

inline std::string_view to_string(Distance d) { return d == Distance::Mid ? "mid" : "close"; }

inline Label parse_label(std::string_view s) {
    if (s == "bona_fide") return Label::BonaFide;
    if (s == "attack") return Label::Attack;
    throw ConfigError("unknown label '" + std::string(s) + "'");
}

inline AttackType parse_attack_type(std::string_view s) {
    if (s == "none") return AttackType::None;
    for (AttackType a : kAttackTypes) {
        if (s == to_string(a)) return a;
    }
    throw ConfigError("unknown attack type '" + std::string(s) + "'");
}

inline Distance parse_distance(std::string_view s) {
    if (s == "mid") return Distance::Mid;
    if (s == "close") return Distance::Close;
    throw ConfigError("unknown distance '" + std::string(s) + "'");
}

}  // namespace liveness
