#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "liveness/dataset.hpp"
#include "liveness/metrics.hpp"
#include "liveness/model.hpp"
#include "liveness/optimizer.hpp"

namespace liveness {

struct TrainConfig {
    std::uint64_t seed = 1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    ArchConfig arch{};
    OptimizerConfig optimizer{};
    bool balance_classes = true;
    /// When > 0, train and evaluate on this many training samples only
    /// (half per class where possible) as a memorization check.
    std::size_t overfit = 0;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
    double dev_acer = 0.0;
    double dev_threshold = 0.5;
    double seconds = 0.0;
};

/// One log line: "epoch=3 train_loss=... dev_loss=... dev_acer=... dev_threshold=... seconds=...".
std::string format_log_line(const EpochRecord& r);
EpochRecord parse_log_line(const std::string& line);

struct TrainResult {
    LivenessNet model;  // best dev checkpoint, threshold set from dev
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training with per-epoch dev evaluation. The checkpoint with the
/// lowest dev ACER (ties: lower dev loss, then earlier epoch) is returned with
/// its dev-selected threshold. Deterministic for a fixed config and data.
TrainResult train(const LoadedSplit& train_data, const LoadedSplit& dev_data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Infer-mode P(bona fide) for every face in [N,3,H,W], processed in chunks.
std::vector<double> score_faces(const LivenessNet& net, const Tensor32& faces, Index chunk = 256);

std::vector<ScoredSample> to_scored(const std::vector<double>& scores, const LoadedSplit& data);

/// Mean cross-entropy of the infer-mode model on a split.
double evaluate_loss(const LivenessNet& net, const LoadedSplit& data);

}  // namespace liveness
