#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modify/trainer.hpp"

namespace modify {

// Config or flag problem; the CLI maps this to exit code 2. `key` names the
// offending key when there is one.
struct ConfigError : std::runtime_error {
    std::string key;
    ConfigError(std::string key_, const std::string& message)
        : std::runtime_error(message), key(std::move(key_)) {}
};

// Full experiment description. File keys use snake_case; command-line flags
// mirror them in --kebab-case. Defaults follow the reference setup: SGD with
// momentum 0.9, weight decay 5e-4, base learning rate 2.5e-4 under polynomial
// decay and gate thresholds (0.05, 0.95). The bank defaults (momentum 0.5,
// init 0) keep difficulty ranks responsive at this training scale.
struct TrainConfig {
    std::optional<Mode> mode;
    std::uint64_t seed = 1;
    std::size_t epochs = 30;
    std::size_t batch = 8;
    double lambda = 0.5;
    std::optional<double> alpha;
    double t_easy = 0.05;
    double t_hard = 0.95;
    double base_lr = 2.5e-4;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double poly_power = 0.9;
    std::size_t n_train = 2000;
    std::size_t n_eval = 500;
    std::size_t targets = 3;
    std::size_t image_size = 16;
    std::size_t classes = 4;
    bool jitter = false;
    std::string out_dir = "runs";

    DatasetConfig dataset_config() const;
    // Requires mode to be set.
    TrainSettings to_settings() const;
    // Key=value lines in fixed key order; written as config_used.cfg.
    std::string canonical_text() const;
    // 8 hex chars hashed over everything except out_dir; part of run
    // directory names.
    std::string short_hash() const;
};

// One key=value assignment, from a file line or a flag.
using ConfigEntry = std::pair<std::string, std::string>;

// Reads a flat key=value file ('#' starts a comment). Throws ConfigError on
// malformed lines or if the file cannot be read.
std::vector<ConfigEntry> read_config_file(const std::string& path);

// Applies defaults, then file entries, then flag overrides, then validates.
// Unknown keys and out-of-range values raise ConfigError naming the key.
// `require_mode` enforces the mode key (single runs need it; the ablation
// driver supplies modes itself).
TrainConfig parse_config(const std::vector<ConfigEntry>& file_entries,
                         const std::vector<ConfigEntry>& flag_entries,
                         bool require_mode = true);

// The recognised config keys, in canonical order.
const std::vector<std::string>& config_keys();

}  // namespace modify
