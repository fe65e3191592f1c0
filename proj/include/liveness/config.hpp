#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "liveness/face.hpp"
#include "liveness/trainer.hpp"

namespace liveness {

using KeyValues = std::map<std::string, std::string>;

/// Flat "key = value" text; '#' starts a comment, blank lines ignored.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

/// Everything a training run needs besides the data.
struct RunConfig {
    TrainConfig train{};
    InputScale input_scale = InputScale::Unit;
    std::filesystem::path data_root;
    std::filesystem::path out = "model.lvw";
};

/// Applies recognised keys (seed, epochs, batch_size, optimizer,
/// learning_rate, momentum, hidden_width, conv_dropout, head_dropout,
/// bn_epsilon, bn_momentum, input_scale, balance_classes, overfit, data,
/// out). Unknown keys are a ConfigError.
void apply_key_values(RunConfig& config, const KeyValues& kv);

}  // namespace liveness
