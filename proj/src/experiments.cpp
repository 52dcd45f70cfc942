#include "modify/experiments.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <ostream>

#include "modify/format.hpp"
#include "modify/reports.hpp"

namespace modify {

namespace fs = std::filesystem;

std::string run_dir_name(const TrainConfig& config) {
    const std::string mode = config.mode ? mode_name(*config.mode) : "unset";
    return mode + "-s" + std::to_string(config.seed) + "-" + config.short_hash();
}

void write_result_csv(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& accuracies) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EmissionError("cannot open '" + path + "' for writing");
    out << "domain,accuracy\n";
    for (const auto& [domain, accuracy] : accuracies)
        out << domain << ',' << format_double(accuracy) << '\n';
    if (!out) throw EmissionError("write failed for '" + path + "'");
}

std::vector<std::pair<std::string, double>> read_result_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EmissionError("cannot read result file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "domain,accuracy")
        throw EmissionError("result file '" + path + "' has an unexpected header");
    std::vector<std::pair<std::string, double>> accuracies;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw EmissionError("result file '" + path + "': bad row '" + line + "'");
        accuracies.emplace_back(line.substr(0, comma), std::stod(line.substr(comma + 1)));
    }
    return accuracies;
}

RunOutput run_single(const TrainConfig& config, bool write_metrics, bool resume,
                     const DatasetSplit* dataset) {
    if (!config.mode) throw ConfigError("mode", "config key 'mode' is required");
    RunOutput output;
    output.dir = (fs::path(config.out_dir) / run_dir_name(config)).string();
    const std::string result_path = output.dir + "/result.csv";
    if (resume && fs::exists(result_path)) {
        output.accuracies = read_result_csv(result_path);
        output.resumed = true;
        return output;
    }

    fs::create_directories(output.dir);
    {
        std::ofstream cfg_out(output.dir + "/config_used.cfg", std::ios::binary);
        cfg_out << config.canonical_text();
    }

    TrainSettings settings = config.to_settings();
    settings.capture_metrics = write_metrics;
    std::optional<TrainState> final_state;
    RunResult result = train(settings, dataset, &final_state);

    if (write_metrics) write_metrics_csv(output.dir + "/metrics.csv", result.metrics);
    write_result_csv(result_path, result.accuracies);
    save_checkpoint(output.dir + "/checkpoint.bin", *final_state);

    output.accuracies = std::move(result.accuracies);
    output.seconds = result.seconds;
    return output;
}

double AblationReport::mean_accuracy(Mode mode, const std::string& domain) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& cell : cells)
        if (cell.mode == mode && cell.domain == domain) {
            sum += cell.accuracy;
            ++count;
        }
    if (count == 0) throw std::invalid_argument("ablation report: no cells for " +
                                                mode_name(mode) + "/" + domain);
    return sum / static_cast<double>(count);
}

double AblationReport::mean_target_accuracy(Mode mode) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& cell : cells)
        if (cell.mode == mode && cell.domain.starts_with("target_")) {
            sum += cell.accuracy;
            ++count;
        }
    if (count == 0) throw std::invalid_argument("ablation report: no target cells for " +
                                                mode_name(mode));
    return sum / static_cast<double>(count);
}

AblationReport run_ablation(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                            std::size_t jobs, std::ostream& log) {
    if (seeds.empty()) throw ConfigError("seed", "ablation needs at least one seed");
    if (jobs == 0) jobs = 1;
    const auto& modes = all_modes();

    // One dataset per seed, shared read-only across the six modes.
    std::vector<DatasetSplit> datasets(seeds.size());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        DatasetConfig data_config = base.dataset_config();
        data_config.seed = seeds[s];
        datasets[s] = generate_dataset(data_config);
    }

    struct Task {
        std::size_t mode_index;
        std::size_t seed_index;
    };
    std::vector<Task> tasks;
    for (std::size_t m = 0; m < modes.size(); ++m)
        for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({m, s});

    std::vector<RunOutput> outputs(tasks.size());
    std::vector<std::string> failures(tasks.size());
    bool diverged = false;
    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            TrainConfig config = base;
            config.mode = modes[tasks[t].mode_index];
            config.seed = seeds[tasks[t].seed_index];
            try {
                RunOutput out = run_single(config, /*write_metrics=*/false, /*resume=*/true,
                                           &datasets[tasks[t].seed_index]);
                std::scoped_lock lock(log_mutex);
                log << (out.resumed ? "resumed " : "trained ") << run_dir_name(config) << "\n";
                outputs[t] = std::move(out);
            } catch (const std::exception& e) {
                std::scoped_lock lock(log_mutex);
                failures[t] = e.what();
                if (dynamic_cast<const DivergenceError*>(&e)) diverged = true;
                log << "FAILED " << run_dir_name(config) << ": " << e.what() << "\n";
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::future<void>> futures;
        for (std::size_t j = 0; j < jobs; ++j)
            futures.push_back(std::async(std::launch::async, worker));
        for (auto& f : futures) f.get();
    }

    // Assemble whatever completed; a failed run leaves its cells out so the
    // partial CSVs still land on disk before the error propagates.
    AblationReport report;
    report.seeds = seeds;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!failures[t].empty()) continue;
        if (report.domains.empty())
            for (const auto& [domain, accuracy] : outputs[t].accuracies)
                report.domains.push_back(domain);
        for (const auto& [domain, accuracy] : outputs[t].accuracies)
            report.cells.push_back({modes[tasks[t].mode_index], domain,
                                    seeds[tasks[t].seed_index], accuracy});
    }

    fs::create_directories(base.out_dir);
    {
        std::ofstream csv(fs::path(base.out_dir) / "ablation.csv", std::ios::binary);
        if (!csv) throw EmissionError("cannot open ablation.csv for writing");
        csv << "mode,domain,seed,accuracy\n";
        for (const auto& cell : report.cells)
            csv << mode_name(cell.mode) << ',' << cell.domain << ',' << cell.seed << ','
                << format_double(cell.accuracy) << '\n';
        if (!csv) throw EmissionError("write failed for ablation.csv");
    }
    {
        std::ofstream csv(fs::path(base.out_dir) / "ablation_summary.csv", std::ios::binary);
        if (!csv) throw EmissionError("cannot open ablation_summary.csv for writing");
        csv << "mode,domain,mean,std\n";
        for (Mode mode : modes)
            for (const auto& domain : report.domains) {
                double sum = 0.0, sum_sq = 0.0;
                std::size_t n = 0;
                for (const auto& cell : report.cells)
                    if (cell.mode == mode && cell.domain == domain) {
                        sum += cell.accuracy;
                        sum_sq += cell.accuracy * cell.accuracy;
                        ++n;
                    }
                if (n == 0) continue;  // partial results: failed runs leave gaps
                const double mean = sum / static_cast<double>(n);
                const double var =
                    n > 1 ? std::max(0.0, (sum_sq - sum * mean) / static_cast<double>(n - 1))
                          : 0.0;
                csv << mode_name(mode) << ',' << domain << ',' << format_double(mean) << ','
                    << format_double(std::sqrt(var)) << '\n';
            }
        if (!csv) throw EmissionError("write failed for ablation_summary.csv");
    }

    std::string first_failure;
    std::size_t failed = 0;
    for (const auto& f : failures)
        if (!f.empty()) {
            if (first_failure.empty()) first_failure = f;
            ++failed;
        }
    if (failed > 0) {
        const std::string message = std::to_string(failed) +
                                    " ablation run(s) failed (partial results written): " +
                                    first_failure;
        if (diverged) throw DivergenceError(message);
        throw EmissionError(message);
    }
    return report;
}

}  // namespace modify
