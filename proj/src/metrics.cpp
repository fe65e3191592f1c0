#include "liveness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

namespace liveness {

namespace {

void check_samples(const std::vector<ScoredSample>& samples) {
    bool any_bona = false, any_attack = false;
    for (const auto& s : samples) {
        if (!std::isfinite(s.score)) throw ConfigError("scored sample with non-finite score");
        (s.truth == Label::BonaFide ? any_bona : any_attack) = true;
    }
    if (!any_bona) throw ConfigError("evaluation set has no bona_fide samples");
    if (!any_attack) throw ConfigError("evaluation set has no attack samples");
}

}  // namespace

std::map<AttackType, double> per_attack_breakdown(const std::vector<ScoredSample>& samples, double threshold) {
    std::map<AttackType, std::size_t> total, accepted;
    for (const auto& s : samples) {
        if (s.truth != Label::Attack) continue;
        ++total[s.attack_type];
        if (decide_bona_fide(s.score, threshold)) ++accepted[s.attack_type];
    }
    std::map<AttackType, double> out;
    for (const auto& [type, n] : total) out[type] = static_cast<double>(accepted[type]) / static_cast<double>(n);
    return out;
}

EvalReport compute_report(const std::vector<ScoredSample>& samples, double threshold) {
    check_samples(samples);
    EvalReport r;
    r.threshold = threshold;
    for (const auto& s : samples) {
        const bool accepted = decide_bona_fide(s.score, threshold);
        if (s.truth == Label::BonaFide) {
            ++(accepted ? r.true_accepts : r.false_rejects);
        } else {
            ++(accepted ? r.false_accepts : r.true_rejects);
            ++r.attacks_by_type[s.attack_type];
        }
    }
    const double attacks = static_cast<double>(r.false_accepts + r.true_rejects);
    const double bona = static_cast<double>(r.true_accepts + r.false_rejects);
    r.apcer = static_cast<double>(r.false_accepts) / attacks;
    r.bpcer = static_cast<double>(r.false_rejects) / bona;
    r.acer = (r.apcer + r.bpcer) / 2.0;
    r.hter = r.acer;
    r.apcer_by_type = per_attack_breakdown(samples, threshold);
    for (const auto& [type, v] : r.apcer_by_type) r.apcer_max = std::max(r.apcer_max, v);
    return r;
}

double select_threshold(const std::vector<ScoredSample>& dev) {
    check_samples(dev);
    std::vector<double> scores;
    for (const auto& s : dev) scores.push_back(s.score);
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    std::vector<double> candidates = scores;
    for (std::size_t i = 0; i + 1 < scores.size(); ++i) candidates.push_back((scores[i] + scores[i + 1]) / 2.0);
    std::sort(candidates.begin(), candidates.end());

    // Sort once and sweep: the count of samples with score >= t per class
    // only shrinks as t grows.
    std::vector<ScoredSample> sorted = dev;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
    std::size_t attacks = 0, bona = 0;
    for (const auto& s : sorted) (s.truth == Label::BonaFide ? bona : attacks)++;

    double best_t = candidates.front();
    double best_acer = 2.0;
    std::size_t below = 0, attacks_below = 0, bona_below = 0;
    for (double t : candidates) {
        while (below < sorted.size() && sorted[below].score < t) {
            (sorted[below].truth == Label::BonaFide ? bona_below : attacks_below)++;
            ++below;
        }
        const double apcer = static_cast<double>(attacks - attacks_below) / static_cast<double>(attacks);
        const double bpcer = static_cast<double>(bona_below) / static_cast<double>(bona);
        const double acer = (apcer + bpcer) / 2.0;
        const bool better = acer < best_acer ||
                            (acer == best_acer && std::abs(t - 0.5) < std::abs(best_t - 0.5));
        if (better) {
            best_acer = acer;
            best_t = t;
        }
    }
    return best_t;
}

std::string to_key_value(const EvalReport& r, const std::string& split) {
    std::ostringstream os;
    os.precision(17);
    if (!split.empty()) os << "split=" << split << '\n';
    os << "threshold=" << r.threshold << '\n'
       << "apcer=" << r.apcer << '\n'
       << "bpcer=" << r.bpcer << '\n'
       << "acer=" << r.acer << '\n'
       << "hter=" << r.hter << '\n'
       << "apcer_max=" << r.apcer_max << '\n'
       << "true_accepts=" << r.true_accepts << '\n'
       << "false_accepts=" << r.false_accepts << '\n'
       << "true_rejects=" << r.true_rejects << '\n'
       << "false_rejects=" << r.false_rejects << '\n';
    for (const auto& [type, v] : r.apcer_by_type) os << "apcer." << to_string(type) << '=' << v << '\n';
    return os.str();
}

std::string to_json(const EvalReport& r, const std::string& split) {
    nlohmann::ordered_json j;
    if (!split.empty()) j["split"] = split;
    j["threshold"] = r.threshold;
    j["apcer"] = r.apcer;
    j["bpcer"] = r.bpcer;
    j["acer"] = r.acer;
    j["hter"] = r.hter;
    j["apcer_max"] = r.apcer_max;
    j["confusion"] = {{"true_accepts", r.true_accepts},
                      {"false_accepts", r.false_accepts},
                      {"true_rejects", r.true_rejects},
                      {"false_rejects", r.false_rejects}};
    nlohmann::ordered_json by_type = nlohmann::ordered_json::object();
    for (const auto& [type, v] : r.apcer_by_type) {
        by_type[std::string(to_string(type))] = {{"apcer", v}, {"count", r.attacks_by_type.at(type)}};
    }
    j["apcer_by_type"] = by_type;
    return j.dump(2);
}

}  // namespace liveness
