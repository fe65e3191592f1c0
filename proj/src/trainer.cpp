#include "liveness/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace liveness {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    arch.validate();
    if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

std::string format_log_line(const EpochRecord& r) {
    std::ostringstream os;
    os.precision(9);
    os << "epoch=" << r.epoch << " train_loss=" << r.train_loss << " dev_loss=" << r.dev_loss
       << " dev_acer=" << r.dev_acer << " dev_threshold=" << r.dev_threshold << " seconds=" << r.seconds;
    return os.str();
}

EpochRecord parse_log_line(const std::string& line) {
    EpochRecord r;
    std::istringstream is(line);
    std::string field;
    int seen = 0;
    while (is >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw ConfigError("log line: malformed field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "epoch") r.epoch = std::stoul(value);
        else if (key == "train_loss") r.train_loss = std::stod(value);
        else if (key == "dev_loss") r.dev_loss = std::stod(value);
        else if (key == "dev_acer") r.dev_acer = std::stod(value);
        else if (key == "dev_threshold") r.dev_threshold = std::stod(value);
        else if (key == "seconds") r.seconds = std::stod(value);
        else continue;
        ++seen;
    }
    if (seen < 6) throw ConfigError("log line: missing fields in '" + line + "'");
    return r;
}

std::vector<double> score_faces(const LivenessNet& net, const Tensor32& faces, Index chunk) {
    const Index n = faces.dim(0);
    const Index face = faces.size() / n;
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(n));
    for (Index start = 0; start < n; start += chunk) {
        const Index m = std::min(chunk, n - start);
        Tensor32 batch({m, faces.dim(1), faces.dim(2), faces.dim(3)});
        std::copy(faces.data() + start * face, faces.data() + (start + m) * face, batch.data());
        const Tensor32 p = net.probabilities(batch);
        for (Index i = 0; i < m; ++i) scores.push_back(static_cast<double>(p(i, 0)));
    }
    return scores;
}

std::vector<ScoredSample> to_scored(const std::vector<double>& scores, const LoadedSplit& data) {
    std::vector<ScoredSample> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out.push_back({scores[i], static_cast<Label>(data.labels[i]), data.attack_types[i]});
    }
    return out;
}

double evaluate_loss(const LivenessNet& net, const LoadedSplit& data) {
    const auto scores = score_faces(net, data.faces);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double p = data.labels[i] == static_cast<int>(Label::BonaFide) ? scores[i] : 1.0 - scores[i];
        total -= std::log(std::max(p, 1e-12));
    }
    return total / static_cast<double>(scores.size());
}

namespace {

// Deterministic overfit subset: alternate classes in order of appearance.
std::vector<std::size_t> overfit_subset(const LoadedSplit& data, std::size_t n) {
    std::vector<std::size_t> bona, attack;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        (data.labels[i] == static_cast<int>(Label::BonaFide) ? bona : attack).push_back(i);
    }
    std::vector<std::size_t> out;
    std::size_t b = 0, a = 0;
    while (out.size() < n && (b < bona.size() || a < attack.size())) {
        if (b < bona.size()) out.push_back(bona[b++]);
        if (out.size() < n && a < attack.size()) out.push_back(attack[a++]);
    }
    return out;
}

}  // namespace

TrainResult train(const LoadedSplit& train_data, const LoadedSplit& dev_data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (train_data.size() < 2) throw ConfigError("training split needs at least 2 samples");

    const LoadedSplit* train_set = &train_data;
    const LoadedSplit* dev_set = &dev_data;
    LoadedSplit subset;
    if (config.overfit > 0) {
        subset = select(train_data, overfit_subset(train_data, config.overfit));
        train_set = &subset;
        dev_set = &subset;
    }

    LivenessNet net = build_model(config.arch, Rng::mix(config.seed, 1));
    Optimizer<float> opt(config.optimizer);
    auto params = net.params();
    Rng dropout_rng(Rng::mix(config.seed, 2));

    TrainResult result{net, {}, 0};
    double best_acer = 2.0, best_loss = 0.0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng epoch_rng(Rng::mix(config.seed, 1000 + epoch));
        std::vector<std::size_t> indices;
        if (config.balance_classes && config.overfit == 0) {
            indices = balanced_indices(train_set->labels, epoch_rng);
        } else {
            indices.resize(static_cast<std::size_t>(train_set->size()));
            for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        }

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (const auto& batch_idx : iterate_batches(indices, config.batch_size, config.seed, epoch)) {
            // batch statistics need two samples per feature
            if (batch_idx.size() < 2) continue;
            const LoadedSplit batch = select(*train_set, batch_idx);
            const Tensor32 logits = net.forward_train(batch.faces, dropout_rng);
            const auto loss = softmax_cross_entropy(logits, batch.labels);
            if (!std::isfinite(loss.loss)) throw NumericError("training loss became non-finite");
            net.backward(loss.grad_logits);
            opt.step(params);
            loss_sum += static_cast<double>(loss.loss) * static_cast<double>(batch_idx.size());
            seen += batch_idx.size();
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(seen);
        const auto scored = to_scored(score_faces(net, dev_set->faces), *dev_set);
        rec.dev_threshold = select_threshold(scored);
        rec.dev_acer = compute_report(scored, rec.dev_threshold).acer;
        rec.dev_loss = evaluate_loss(net, *dev_set);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.dev_acer < best_acer || (rec.dev_acer == best_acer && rec.dev_loss < best_loss)) {
            best_acer = rec.dev_acer;
            best_loss = rec.dev_loss;
            result.model = net;
            result.model.set_threshold(rec.dev_threshold);
            result.best_epoch = epoch;
        }
    }
    return result;
}

}  // namespace liveness
