// Command-line entry point: synth, train, eval, predict, serve.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <pthread.h>
#include <thread>

#include "liveness/config.hpp"
#include "liveness/http_server.hpp"
#include "liveness/image.hpp"
#include "liveness/service.hpp"
#include "liveness/synth.hpp"
#include "liveness/trainer.hpp"
#include "liveness/weights_io.hpp"

namespace fs = std::filesystem;
using namespace liveness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAttack = 2;

struct SynthArgs {
    fs::path out;
    std::uint64_t seed = 7;
    std::size_t subjects = 20;
    std::size_t per_class = 25;
    double padding = kDefaultPadding;
};

struct TrainArgs {
    fs::path data;
    fs::path config;
    std::uint64_t seed = 1;
    fs::path out;
    std::size_t overfit = 0;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";
    fs::path log;
};

struct EvalArgs {
    fs::path data;
    fs::path model;
    std::string split = "test";
    std::string report;
};

struct PredictArgs {
    fs::path model;
    fs::path image;
    std::string bbox;
    double padding = kDefaultPadding;
};

struct ServeArgs {
    fs::path model;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string detector = "center";
    fs::path static_dir;
    double padding = kDefaultPadding;
};

int run_synth(const SynthArgs& a) {
    SynthConfig cfg;
    cfg.seed = a.seed;
    cfg.subjects = a.subjects;
    cfg.per_class = a.per_class;
    cfg.padding_fraction = a.padding;
    const CorpusManifest m = synth_corpus(a.out, cfg);
    std::cout << "manifest: " << (a.out / kManifestName).string() << "\n";
    std::cout << "images: " << m.records.size() << "\n";
    for (Split s : {Split::Train, Split::Dev, Split::Test}) {
        std::size_t subjects = 0;
        for (const auto& [id, split] : m.subject_split) subjects += split == s;
        std::cout << to_string(s) << ": subjects=" << subjects << " images=" << m.records_in(s).size() << "\n";
    }
    const auto bytes = read_file(a.out / kManifestName);
    std::cout << "manifest_crc32: " << hex32(crc32_of(bytes)) << "\n";
    return kExitOk;
}

int run_train(const TrainArgs& a, const CLI::App& cmd) {
    RunConfig rc;
    if (!a.config.empty()) apply_key_values(rc, read_key_values(a.config));
    // flags given on the command line override the file
    if (cmd.count("--data")) rc.data_root = a.data;
    if (cmd.count("--out")) rc.out = a.out;
    if (cmd.count("--seed")) rc.train.seed = a.seed;
    if (cmd.count("--epochs")) rc.train.epochs = a.epochs;
    if (cmd.count("--overfit")) rc.train.overfit = a.overfit;
    if (cmd.count("--batch-size")) rc.train.batch_size = a.batch_size;
    if (cmd.count("--lr")) rc.train.optimizer.learning_rate = a.learning_rate;
    if (cmd.count("--optimizer")) rc.train.optimizer.kind = parse_optimizer(a.optimizer);
    rc.train.validate();
    if (rc.data_root.empty()) throw ConfigError("no corpus given (--data or 'data' in the config file)");
    if (!fs::exists(rc.data_root / kManifestName)) {
        throw IoError("no corpus at '" + rc.data_root.string() + "' (missing " + kManifestName + ")");
    }
    if (!rc.out.parent_path().empty() && !fs::is_directory(rc.out.parent_path())) {
        throw IoError("output directory '" + rc.out.parent_path().string() + "' does not exist");
    }

    const CorpusManifest manifest = read_manifest(rc.data_root);
    manifest.validate();
    const LoadedSplit train_set = load_split(manifest, Split::Train, rc.input_scale);
    const LoadedSplit dev_set = load_split(manifest, Split::Dev, rc.input_scale);
    std::cout << "train images=" << train_set.size() << " dev images=" << dev_set.size() << "\n";

    const fs::path log_path = a.log.empty() ? fs::path(rc.out.string() + ".log") : a.log;
    std::ofstream log(log_path, std::ios::app);
    if (!log) throw IoError("cannot open training log '" + log_path.string() + "'");
    log << "# run seed=" << rc.train.seed << " epochs=" << rc.train.epochs
        << " batch_size=" << rc.train.batch_size << " optimizer=" << to_string(rc.train.optimizer.kind)
        << " lr=" << rc.train.optimizer.learning_rate << " overfit=" << rc.train.overfit << "\n";

    const TrainResult result = train(train_set, dev_set, rc.train, [&](const EpochRecord& r) {
        const std::string line = format_log_line(r);
        log << line << "\n";
        log.flush();
        std::cout << line << "\n";
    });
    save_weights(result.model, rc.out);
    const auto& best = result.history[result.best_epoch - 1];
    std::cout << "best_epoch=" << result.best_epoch << " dev_acer=" << best.dev_acer
              << " threshold=" << result.model.threshold() << "\n";
    std::cout << "final_train_loss=" << result.history.back().train_loss << "\n";
    std::cout << "weights: " << rc.out.string() << " checksum=" << weights_checksum(read_file(rc.out)) << "\n";
    return kExitOk;
}

int run_eval(const EvalArgs& a) {
    const Split split = parse_split(a.split);
    const CorpusManifest manifest = read_manifest(a.data);
    manifest.validate();
    LivenessNet net = load_weights(a.model);

    const LoadedSplit dev = load_split(manifest, Split::Dev);
    const double threshold = select_threshold(to_scored(score_faces(net, dev.faces), dev));
    const LoadedSplit data = split == Split::Dev ? dev : load_split(manifest, split);
    const EvalReport report = compute_report(to_scored(score_faces(net, data.faces), data), threshold);

    const std::string prefix = a.report.empty()
                                   ? (a.model.parent_path() / (a.model.stem().string() + "_" + a.split)).string()
                                   : a.report;
    std::ofstream(prefix + "_report.txt") << to_key_value(report, a.split);
    std::ofstream(prefix + "_report.json") << to_json(report, a.split) << "\n";
    std::cout << to_key_value(report, a.split);
    std::cout << "report: " << prefix << "_report.txt " << prefix << "_report.json\n";
    return kExitOk;
}

int run_predict(const PredictArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    ServiceOptions opts;
    opts.padding_fraction = a.padding;
    opts.detector.kind = DetectorBinding::Kind::CenterCrop;
    const LivenessService service(load_served_model(a.model), opts);
    LivenessRequest req;
    req.image = read_file(a.image);
    if (!a.bbox.empty()) req.bbox = parse_bbox(a.bbox);
    const LivenessVerdict v = service.handle_liveness(req);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "label=" << to_string(v.label) << " score=" << std::setprecision(9) << v.score
              << " bbox=" << v.bbox.to_string() << std::setprecision(4) << " ms=" << ms << "\n";
    return v.label == Label::BonaFide ? kExitOk : kExitAttack;
}

int run_serve(const ServeArgs& a) {
    ServiceOptions opts;
    opts.detector = DetectorBinding::parse(a.detector);
    opts.padding_fraction = a.padding;
    std::shared_ptr<const LoadedModel> model;
    if (!a.model.empty()) model = load_served_model(a.model);
    auto service = std::make_shared<const LivenessService>(model, opts);

    // Route SIGINT/SIGTERM to a watcher thread instead of the server threads.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    LivenessHttpServer server(service, a.static_dir.empty() ? std::nullopt : std::optional(a.static_dir));
    const int port = server.bind(a.host, a.port);
    std::cout << "listening on http://" << a.host << ":" << port << " detector=" << opts.detector.describe()
              << " model=" << (model ? model->checksum : "none") << std::endl;

    std::thread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        std::cout << "received " << (sig == SIGINT ? "SIGINT" : "SIGTERM") << ", shutting down" << std::endl;
        server.stop();
    });
    server.listen();
    // listen() can also return on its own; wake the watcher so it can exit.
    if (server.running()) server.stop();
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    std::cout << "stopped" << std::endl;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Face liveness detection: corpus synthesis, training, evaluation and serving"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic bona fide / attack corpus");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth.seed, "Random seed");
    synth_cmd->add_option("--subjects", synth.subjects, "Number of subjects")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--per-class", synth.per_class, "Frames per subject and class")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--padding", synth.padding, "Padding fraction of the padded crops")
        ->check(CLI::NonNegativeNumber);

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a model on the train split, selecting on dev");
    train_cmd->add_option("--data", tr.data, "Corpus root");
    train_cmd->add_option("--config", tr.config, "Key-value config file")->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", tr.seed, "Random seed");
    train_cmd->add_option("--out", tr.out, "Output weight file");
    train_cmd->add_option("--overfit", tr.overfit, "Train and evaluate on N training samples only");
    train_cmd->add_option("--epochs", tr.epochs, "Number of epochs")->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch-size", tr.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", tr.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
    train_cmd->add_option("--optimizer", tr.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
    train_cmd->add_option("--log", tr.log, "Training log (default <out>.log, appended)");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score a split with a dev-selected threshold");
    eval_cmd->add_option("--data", ev.data, "Corpus root")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--model", ev.model, "Weight file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--split", ev.split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
    eval_cmd->add_option("--report", ev.report, "Report path prefix (default next to the model)");

    PredictArgs pr;
    auto* predict_cmd = app.add_subcommand("predict", "Classify one image (exit 0 bona fide, 2 attack, 1 error)");
    predict_cmd->add_option("--model", pr.model, "Weight file")->required();
    predict_cmd->add_option("--image", pr.image, "PNG or JPEG image")->required();
    predict_cmd->add_option("--bbox", pr.bbox, "Face box x,y,w,h (default: centered square)");
    predict_cmd->add_option("--padding", pr.padding, "Padding fraction")->check(CLI::NonNegativeNumber);

    ServeArgs sv;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP liveness service");
    serve_cmd->add_option("--model", sv.model, "Weight file (omit to start degraded)");
    serve_cmd->add_option("--host", sv.host, "Bind address");
    serve_cmd->add_option("--port", sv.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--detector", sv.detector, "manifest, center or external:<url>");
    serve_cmd->add_option("--static-dir", sv.static_dir, "Directory served under /")->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--padding", sv.padding, "Default padding fraction")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*synth_cmd) return run_synth(synth);
        if (*train_cmd) return run_train(tr, *train_cmd);
        if (*eval_cmd) return run_eval(ev);
        if (*predict_cmd) return run_predict(pr);
        if (*serve_cmd) return run_serve(sv);
    } catch (const ServiceError& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
