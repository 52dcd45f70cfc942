#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "modify/config.hpp"
#include "modify/trainer.hpp"

namespace modify {

// "<mode>-s<seed>-<hash8>": stable per config so reruns and resumes find
// their outputs.
std::string run_dir_name(const TrainConfig& config);

struct RunOutput {
    std::string dir;
    std::vector<std::pair<std::string, double>> accuracies;
    double seconds = 0.0;
    bool resumed = false;
};

// Executes one training run under <out_dir>/<run_dir_name>, writing
// config_used.cfg, result.csv and checkpoint.bin (plus metrics.csv when
// write_metrics). If the run directory already holds a result.csv and
// `resume` is set, the stored result is returned instead of retraining.
RunOutput run_single(const TrainConfig& config, bool write_metrics, bool resume,
                     const DatasetSplit* dataset = nullptr);

struct AblationCell {
    Mode mode;
    std::string domain;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
};

struct AblationReport {
    std::vector<AblationCell> cells;  // mode-major, then seed, then domain
    std::vector<std::string> domains;
    std::vector<std::uint64_t> seeds;

    double mean_accuracy(Mode mode, const std::string& domain) const;
    // Mean accuracy over all target_* domains and all seeds.
    double mean_target_accuracy(Mode mode) const;
};

// Runs all six modes for every seed (resuming completed runs) and writes
// ablation.csv plus ablation_summary.csv under the config's out_dir. Runs
// are independent; `jobs` > 1 executes them in parallel without changing
// any output byte. `log` receives one progress line per run.
AblationReport run_ablation(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                            std::size_t jobs, std::ostream& log);

// result.csv helpers (domain,accuracy rows).
void write_result_csv(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& accuracies);
std::vector<std::pair<std::string, double>> read_result_csv(const std::string& path);

}  // namespace modify
