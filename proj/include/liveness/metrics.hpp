#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "liveness/labels.hpp"

namespace liveness {

struct ScoredSample {
    double score;  // P(bona fide), in [0, 1]
    Label truth;
    AttackType attack_type = AttackType::None;
};

/// Presentation-attack-detection error rates at one threshold. A sample is
/// accepted as bona fide iff score >= threshold.
///   APCER = accepted attacks / attacks
///   BPCER = rejected bona fide / bona fide
///   ACER  = (APCER + BPCER) / 2;  HTER is the same quantity here.
struct EvalReport {
    double threshold = 0.5;
    double apcer = 0.0;
    double bpcer = 0.0;
    double acer = 0.0;
    double hter = 0.0;
    std::size_t true_accepts = 0;   // bona fide accepted
    std::size_t false_accepts = 0;  // attacks accepted
    std::size_t true_rejects = 0;   // attacks rejected
    std::size_t false_rejects = 0;  // bona fide rejected
    std::map<AttackType, double> apcer_by_type;
    std::map<AttackType, std::size_t> attacks_by_type;
    double apcer_max = 0.0;  // worst subtype

    std::size_t total() const { return true_accepts + false_accepts + true_rejects + false_rejects; }
};

/// Throws ConfigError naming the missing class if either class is absent,
/// or for a non-finite score.
EvalReport compute_report(const std::vector<ScoredSample>& samples, double threshold);

/// Per-subtype APCER over the attack samples.
std::map<AttackType, double> per_attack_breakdown(const std::vector<ScoredSample>& samples, double threshold);

/// Sweeps every distinct score and the midpoints between neighbours;
/// returns the candidate with minimal ACER, ties to the one closest to 0.5,
/// then the smaller.
double select_threshold(const std::vector<ScoredSample>& dev);

/// "key=value" lines; stable key order.
std::string to_key_value(const EvalReport& r, const std::string& split = "");
/// Structured JSON object with the same fields.
std::string to_json(const EvalReport& r, const std::string& split = "");

}  // namespace liveness
