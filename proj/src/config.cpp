#include "liveness/config.hpp"

#include <fstream>
#include <sstream>

namespace liveness {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T v{};
    if (!(is >> v) || !is.eof()) throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

void apply_key_values(RunConfig& c, const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "seed") c.train.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "epochs") c.train.epochs = parse_number<std::size_t>(key, value);
        else if (key == "batch_size") c.train.batch_size = parse_number<std::size_t>(key, value);
        else if (key == "optimizer") c.train.optimizer.kind = parse_optimizer(value);
        else if (key == "learning_rate") c.train.optimizer.learning_rate = parse_number<double>(key, value);
        else if (key == "momentum") c.train.optimizer.momentum = parse_number<double>(key, value);
        else if (key == "hidden_width") c.train.arch.hidden_width = parse_number<Index>(key, value);
        else if (key == "conv_dropout") c.train.arch.conv_dropout = parse_number<double>(key, value);
        else if (key == "head_dropout") c.train.arch.head_dropout = parse_number<double>(key, value);
        else if (key == "bn_epsilon") c.train.arch.bn_epsilon = parse_number<double>(key, value);
        else if (key == "bn_momentum") c.train.arch.bn_momentum = parse_number<double>(key, value);
        else if (key == "balance_classes") c.train.balance_classes = parse_bool(key, value);
        else if (key == "overfit") c.train.overfit = parse_number<std::size_t>(key, value);
        else if (key == "data") c.data_root = value;
        else if (key == "out") c.out = value;
        else if (key == "input_scale") {
            if (value == "unit") c.input_scale = InputScale::Unit;
            else if (value == "raw") c.input_scale = InputScale::Raw;
            else throw ConfigError("config: input_scale must be unit or raw");
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }
}

}  // namespace liveness
