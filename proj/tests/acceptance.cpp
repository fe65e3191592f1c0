// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: liveness_acceptance [scratch-dir]

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "grad_cases.hpp"
#include "liveness/ops.hpp"
#include "liveness/service.hpp"
#include "liveness/synth.hpp"
#include "liveness/trainer.hpp"
#include "liveness/weights_io.hpp"
#include "metrics_oracle.hpp"
#include "param_oracle.hpp"
#include "support.hpp"

using namespace liveness;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << " [" << std::fixed
              << std::setprecision(1) << seconds_since(t0) << " s]" << std::endl;
    std::cout.unsetf(std::ios::fixed);
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

Outcome param_budget() {
    const ArchConfig arch;
    const long long oracle = expected_param_count(arch);
    const long long counted = build_model(arch, 1).param_count();
    const double off = std::abs(static_cast<double>(counted) - 170000.0) / 170000.0;
    const bool pass = counted == 171570 && oracle == counted && off <= 0.01;
    return {pass, "model=" + std::to_string(counted) + " oracle=" + std::to_string(oracle) +
                      " vs 170k off by " + fmt(100 * off, 3) + "%"};
}

Outcome gradient_checks() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_where;
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (auto& gc : layer_grad_cases(seed)) {
            const auto r = gradient_check(gc.net, gc.input, seed, 1e-5);
            for (const auto& [tensor, err] : r.max_rel_error) {
                ++checked;
                if (err >= worst) {
                    worst = err;
                    worst_where = gc.name + "/" + tensor + " seed " + std::to_string(seed);
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-3 && secs < 60.0, std::to_string(checked) + " tensors over 20 seeds, max rel error " +
                                             fmt(worst, 3) + " (" + worst_where + ")"};
}

// The kernel is one template; the binary64 instance isolates the algorithm
// from binary32 rounding, which alone is ~2e-7 at outputs near 4.
Outcome conv_oracle() {
    Rng rng(2024);
    double worst64 = 0.0, worst32 = 0.0, worst32_ratio = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + rng.below(2), c = 1 + rng.below(4), k = 1 + rng.below(4);
        const Index h = 1 + rng.below(12), w = 1 + rng.below(12);
        const auto x = random_tensor<double>({n, c, h, w}, rng);
        const auto wt = random_tensor<double>({k, c, 3, 3}, rng);
        const auto b = random_tensor<double>({k}, rng);
        const Tensor64 got64 = conv3x3(x, wt, b);
        const Tensor64 want64 = conv3x3_reference(x, wt, b);
        worst64 = std::max(worst64, (got64.vec() - want64.vec()).cwiseAbs().maxCoeff());

        const Tensor32 x32 = x.cast<float>(), w32 = wt.cast<float>(), b32 = b.cast<float>();
        const Tensor32 got32 = conv3x3(x32, w32, b32);
        const Tensor64 want32 = conv3x3_reference(x32, w32, b32);
        const Tensor64 bound = conv3x3_float_error_bound(x32, w32, b32);
        for (Index i = 0; i < got32.size(); ++i) {
            const double err = std::abs(got32[i] - want32[i]);
            worst32 = std::max(worst32, err);
            worst32_ratio = std::max(worst32_ratio, err / bound[i]);
        }
    }
    return {worst64 <= 1e-6 && worst32_ratio <= 1.0,
            "100 instances, binary64 max abs error " + fmt(worst64, 3) + " (limit 1e-6); binary32 max abs error " +
                fmt(worst32, 3) + ", at most " + fmt(worst32_ratio, 3) + " of its rounding-error bound"};
}

Outcome overfit(const LoadedSplit& train_set) {
    TrainConfig cfg;
    cfg.seed = 1;
    cfg.epochs = 200;
    cfg.overfit = 32;
    const auto t0 = Clock::now();
    const TrainResult r = train(train_set, train_set, cfg);
    const double secs = seconds_since(t0);
    const double final_loss = r.history.back().train_loss;
    return {final_loss < 0.05 && secs < 120.0,
            "32 samples, 200 epochs, final cross-entropy " + fmt(final_loss, 4) + " (eval-mode " +
                fmt(r.history.back().dev_loss, 4) + ")"};
}

Outcome desk_acer(const CorpusManifest& manifest, LivenessNet& trained) {
    const auto t0 = Clock::now();
    const LoadedSplit train_set = load_split(manifest, Split::Train);
    const LoadedSplit dev = load_split(manifest, Split::Dev);
    const LoadedSplit test = load_split(manifest, Split::Test);
    TrainConfig cfg;
    cfg.seed = 1;
    const TrainResult r = train(train_set, dev, cfg);
    trained = r.model;

    const double threshold = select_threshold(to_scored(score_faces(trained, dev.faces), dev));
    const auto scored = to_scored(score_faces(trained, test.faces), test);
    const EvalReport rep = compute_report(scored, threshold);
    const BruteCounts brute = brute_force_confusion(scored, threshold);
    const bool identity = rep.acer == (rep.apcer + rep.bpcer) / 2.0 && rep.true_accepts == brute.ta &&
                          rep.false_accepts == brute.fa && rep.true_rejects == brute.tr &&
                          rep.false_rejects == brute.fr && rep.apcer == brute.apcer && rep.bpcer == brute.bpcer &&
                          rep.acer == (brute.apcer + brute.bpcer) / 2.0;
    const double secs = seconds_since(t0);
    return {rep.acer <= 0.05 && identity && secs <= 900.0 && threshold == trained.threshold(),
            std::to_string(manifest.records.size()) + " images, train/dev/test " + std::to_string(train_set.size()) +
                "/" + std::to_string(dev.size()) + "/" + std::to_string(test.size()) + ", best epoch " +
                std::to_string(r.best_epoch) + ", dev threshold " + fmt(threshold, 4) + ", test APCER " +
                fmt(rep.apcer, 4) + " BPCER " + fmt(rep.bpcer, 4) + " ACER " + fmt(rep.acer, 4) +
                (identity ? ", brute-force oracle agrees" : ", brute-force oracle DISAGREES")};
}

Outcome latency(const LivenessNet& trained) {
    const LivenessService service(make_served_model(trained), {});
    std::vector<LivenessRequest> requests;
    Rng rng(77);
    const std::vector<AttackType> kinds = {AttackType::None, AttackType::NormalPrint, AttackType::GlossyPrint,
                                           AttackType::VideoReplay, AttackType::NormalPrintMask,
                                           AttackType::GlossyPrintMask};
    for (int i = 0; i < 100; ++i) {
        const SubjectStyle s = make_subject("lat" + std::to_string(i % 10), 77);
        const SynthFrame f = render_frame(s, kinds[static_cast<std::size_t>(i) % kinds.size()], Distance::Mid, rng);
        LivenessRequest req;
        req.image = encode_png(f.frame);
        req.bbox = f.face;
        requests.push_back(std::move(req));
    }
    service.handle_liveness(requests.front());  // warm-up
    double total_ms = 0.0, worst_ms = 0.0;
    for (const auto& req : requests) {
        const auto t0 = Clock::now();
        service.handle_liveness(req);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        total_ms += ms;
        worst_ms = std::max(worst_ms, ms);
    }
    const double mean = total_ms / static_cast<double>(requests.size());
    return {mean < 50.0, "100 PNG requests (96x96), decode to verdict mean " + fmt(mean, 3) + " ms, max " +
                             fmt(worst_ms, 3) + " ms"};
}

Outcome serialization(const fs::path& scratch) {
    int identical = 0, rejected = 0, corruptions = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(Rng::mix(seed, 0x5E));
        LivenessNet net = build_model(ArchConfig{}, seed);
        net.forward_train(random_tensor<float>({4, 3, 32, 32}, rng, 0, 1), rng);  // move running stats
        net.set_threshold(rng.uniform());
        const auto x = random_tensor<float>({5, 3, 32, 32}, rng, 0, 1);
        const Tensor32 before = net.probabilities(x);

        const fs::path path = scratch / ("model_" + std::to_string(seed) + ".lvw");
        save_weights(net, path);
        const LivenessNet back = load_weights(path);
        const Tensor32 after = back.probabilities(x);
        if (before.shape() == after.shape() &&
            std::memcmp(before.data(), after.data(), sizeof(float) * static_cast<std::size_t>(before.size())) == 0 &&
            back.threshold() == net.threshold()) {
            ++identical;
        }

        auto bytes = read_file(path);
        // one flipped bit in the tensor payload, and a truncation
        auto flipped = bytes;
        flipped[12 + rng.below(flipped.size() - 16)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
        auto truncated = bytes;
        truncated.resize(bytes.size() - 1 - rng.below(bytes.size() / 2));
        for (const auto* bad : {&flipped, &truncated}) {
            ++corruptions;
            try {
                decode_weights(*bad);
            } catch (const ChecksumError&) {
                ++rejected;
            } catch (const std::exception&) {
            }
        }
    }
    return {identical == 20 && rejected == corruptions,
            std::to_string(identical) + "/20 models bit-identical after save/load, " + std::to_string(rejected) + "/" +
                std::to_string(corruptions) + " corrupted files rejected with ChecksumError"};
}

Outcome metrics_properties() {
    Rng rng(99);
    int monotone = 0, matches = 0;
    for (int set = 0; set < 1000; ++set) {
        const auto samples = random_scored(rng, 2 + rng.below(200));
        std::vector<double> thresholds = {-0.1, 0.0, 1.0, 1.1};
        for (const auto& s : samples) thresholds.push_back(s.score);
        for (int i = 0; i < 20; ++i) thresholds.push_back(rng.uniform());
        std::sort(thresholds.begin(), thresholds.end());

        bool ok = true, agree = true;
        double prev_apcer = 2.0, prev_bpcer = -1.0;
        for (double t : thresholds) {
            const EvalReport r = compute_report(samples, t);
            ok = ok && r.apcer <= prev_apcer && r.bpcer >= prev_bpcer;
            prev_apcer = r.apcer;
            prev_bpcer = r.bpcer;
            const BruteCounts b = brute_force_confusion(samples, t);
            agree = agree && r.true_accepts == b.ta && r.false_accepts == b.fa && r.true_rejects == b.tr &&
                    r.false_rejects == b.fr && r.apcer == b.apcer && r.bpcer == b.bpcer &&
                    r.acer == (b.apcer + b.bpcer) / 2.0;
        }
        monotone += ok;
        matches += agree;
    }
    return {monotone == 1000 && matches == 1000,
            std::to_string(monotone) + "/1000 sets monotone in threshold, " + std::to_string(matches) +
                "/1000 agree with the brute-force loop"};
}

Outcome determinism(const fs::path& scratch) {
    SynthConfig sc;
    sc.seed = 21;
    sc.subjects = 6;
    sc.per_class = 6;
    const CorpusManifest m = synth_corpus(scratch / "det_corpus", sc);
    const LoadedSplit train_set = load_split(m, Split::Train);
    const LoadedSplit dev = load_split(m, Split::Dev);
    TrainConfig cfg;
    cfg.seed = 5;
    cfg.epochs = 3;
    std::string sums[2];
    for (int run = 0; run < 2; ++run) {
        const fs::path path = scratch / ("det_" + std::to_string(run) + ".lvw");
        save_weights(train(train_set, dev, cfg).model, path);
        sums[run] = weights_checksum(read_file(path));
    }
    return {sums[0] == sums[1], "two runs (seed 5, 3 epochs, " + std::to_string(train_set.size()) +
                                    " images): " + sums[0] + " " + sums[1]};
}

}  // namespace

int main(int argc, char** argv) {
    std::unique_ptr<TempDir> temp;
    fs::path scratch;
    if (argc > 1) {
        scratch = argv[1];
        fs::create_directories(scratch);
    } else {
        temp = std::make_unique<TempDir>("acceptance");
        scratch = temp->path();
    }

    report("parameter budget", param_budget);
    report("gradient correctness", gradient_checks);
    report("conv oracle equivalence", conv_oracle);
    report("metrics properties", metrics_properties);
    report("serialization", [&] { return serialization(scratch); });

    SynthConfig corpus;  // 20 subjects, 25 frames per subject and class
    CorpusManifest manifest;
    const auto t0 = Clock::now();
    manifest = synth_corpus(scratch / "corpus", corpus);
    std::cout << "corpus: " << manifest.records.size() << " images in " << fmt(seconds_since(t0), 3) << " s"
              << std::endl;

    report("overfit sanity", [&] { return overfit(load_split(manifest, Split::Train)); });
    LivenessNet trained = build_model(ArchConfig{}, 1);
    bool have_model = false;
    report("desk-scale ACER", [&] {
        auto o = desk_acer(manifest, trained);
        have_model = true;
        return o;
    });
    report("latency", [&] {
        if (!have_model) return Outcome{false, "no trained model"};
        return latency(trained);
    });
    report("determinism", [&] { return determinism(scratch); });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
