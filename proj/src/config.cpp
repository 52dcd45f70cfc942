#include "modify/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "modify/format.hpp"

namespace modify {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
        throw ConfigError(key, "config key '" + key + "': '" + value + "' is not a finite number");
    return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE || value.find('-') != std::string::npos)
        throw ConfigError(key, "config key '" + key + "': '" + value +
                                   "' is not a non-negative integer");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key, "config key '" + key + "': '" + value +
                               "' is not a boolean (true/false/1/0)");
}

void apply_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mode") {
        try {
            cfg.mode = mode_from_name(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("mode", std::string("config key 'mode': ") + e.what());
        }
    } else if (key == "seed") {
        cfg.seed = parse_count(key, value);
    } else if (key == "epochs") {
        cfg.epochs = parse_count(key, value);
    } else if (key == "batch") {
        cfg.batch = parse_count(key, value);
    } else if (key == "lambda") {
        cfg.lambda = parse_real(key, value);
    } else if (key == "alpha") {
        cfg.alpha = parse_real(key, value);
    } else if (key == "t_easy") {
        cfg.t_easy = parse_real(key, value);
    } else if (key == "t_hard") {
        cfg.t_hard = parse_real(key, value);
    } else if (key == "base_lr") {
        cfg.base_lr = parse_real(key, value);
    } else if (key == "momentum") {
        cfg.momentum = parse_real(key, value);
    } else if (key == "weight_decay") {
        cfg.weight_decay = parse_real(key, value);
    } else if (key == "poly_power") {
        cfg.poly_power = parse_real(key, value);
    } else if (key == "n_train") {
        cfg.n_train = parse_count(key, value);
    } else if (key == "n_eval") {
        cfg.n_eval = parse_count(key, value);
    } else if (key == "targets") {
        cfg.targets = parse_count(key, value);
    } else if (key == "image_size") {
        cfg.image_size = parse_count(key, value);
    } else if (key == "classes") {
        cfg.classes = parse_count(key, value);
    } else if (key == "jitter") {
        cfg.jitter = parse_bool(key, value);
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else {
        throw ConfigError(key, "unknown config key '" + key + "'");
    }
}

void validate(const TrainConfig& cfg, bool require_mode) {
    if (require_mode && !cfg.mode)
        throw ConfigError("mode", "config key 'mode' is required");
    if (!(cfg.lambda >= 0.0 && cfg.lambda < 1.0))
        throw ConfigError("lambda", "config key 'lambda' must lie in [0, 1)");
    if (!(cfg.t_easy >= 0.0 && cfg.t_easy < cfg.t_hard && cfg.t_hard <= 1.0))
        throw ConfigError("t_easy", "config keys 't_easy'/'t_hard' must satisfy "
                                    "0 <= t_easy < t_hard <= 1");
    if (!(cfg.base_lr > 0.0))
        throw ConfigError("base_lr", "config key 'base_lr' must be positive");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw ConfigError("momentum", "config key 'momentum' must lie in [0, 1)");
    if (!(cfg.weight_decay >= 0.0))
        throw ConfigError("weight_decay", "config key 'weight_decay' must be non-negative");
    if (!(cfg.poly_power > 0.0))
        throw ConfigError("poly_power", "config key 'poly_power' must be positive");
    if (cfg.batch == 0)
        throw ConfigError("batch", "config key 'batch' must be at least 1");
    if (cfg.alpha && !std::isfinite(*cfg.alpha))
        throw ConfigError("alpha", "config key 'alpha' must be finite");
    try {
        validate_dataset_config(cfg.dataset_config());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("n_train", std::string("dataset config invalid: ") + e.what());
    }
    if (cfg.out_dir.empty())
        throw ConfigError("out_dir", "config key 'out_dir' must not be empty");
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "mode",      "seed",       "epochs",       "batch",      "lambda",
        "alpha",     "t_easy",     "t_hard",       "base_lr",    "momentum",
        "weight_decay", "poly_power", "n_train",   "n_eval",     "targets",
        "image_size", "classes",   "jitter",       "out_dir",
    };
    return keys;
}

DatasetConfig TrainConfig::dataset_config() const {
    DatasetConfig d;
    d.n_train = n_train;
    d.n_eval = n_eval;
    d.targets = targets;
    d.image_size = image_size;
    d.classes = classes;
    d.seed = seed;
    return d;
}

TrainSettings TrainConfig::to_settings() const {
    if (!mode) throw ConfigError("mode", "config key 'mode' is required");
    TrainSettings s;
    s.mode = *mode;
    s.seed = seed;
    s.epochs = epochs;
    s.batch = batch;
    s.lambda = lambda;
    s.alpha = alpha;
    s.thresholds = {t_easy, t_hard};
    s.base_lr = base_lr;
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    s.poly_power = poly_power;
    s.dataset = dataset_config();
    s.jitter = jitter;
    return s;
}

std::string TrainConfig::canonical_text() const {
    std::string text;
    auto line = [&](const std::string& key, const std::string& value) {
        text += key;
        text += '=';
        text += value;
        text += '\n';
    };
    line("mode", mode ? mode_name(*mode) : "");
    line("seed", std::to_string(seed));
    line("epochs", std::to_string(epochs));
    line("batch", std::to_string(batch));
    line("lambda", format_double(lambda));
    line("alpha", alpha ? format_double(*alpha) : "");
    line("t_easy", format_double(t_easy));
    line("t_hard", format_double(t_hard));
    line("base_lr", format_double(base_lr));
    line("momentum", format_double(momentum));
    line("weight_decay", format_double(weight_decay));
    line("poly_power", format_double(poly_power));
    line("n_train", std::to_string(n_train));
    line("n_eval", std::to_string(n_eval));
    line("targets", std::to_string(targets));
    line("image_size", std::to_string(image_size));
    line("classes", std::to_string(classes));
    line("jitter", jitter ? "true" : "false");
    line("out_dir", out_dir);
    return text;
}

std::string TrainConfig::short_hash() const {
    // FNV-1a over the canonical text minus out_dir: moving the output root
    // must not rename runs.
    std::string text = canonical_text();
    const auto pos = text.rfind("out_dir=");
    if (pos != std::string::npos) text.resize(pos);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<std::uint32_t>(h ^ (h >> 32)));
    return buf;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
    std::vector<ConfigEntry> entries;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.resize(hash);
        const std::string stripped = trim(raw);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", "config file '" + path + "' line " + std::to_string(line_no) +
                                      ": expected key=value, got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError("", "config file '" + path + "' line " + std::to_string(line_no) +
                                      ": empty key");
        entries.emplace_back(key, value);
    }
    return entries;
}

TrainConfig parse_config(const std::vector<ConfigEntry>& file_entries,
                         const std::vector<ConfigEntry>& flag_entries, bool require_mode) {
    TrainConfig cfg;
    for (const auto& [key, value] : file_entries) apply_entry(cfg, key, value);
    for (const auto& [key, value] : flag_entries) apply_entry(cfg, key, value);
    validate(cfg, require_mode);
    return cfg;
}

}  // namespace modify
