#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "acceptance.hpp"
#include "modify/config.hpp"
#include "modify/experiments.hpp"
#include "modify/reports.hpp"
#include "modify/synthdata.hpp"

namespace fs = std::filesystem;
using namespace modify;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

void print_usage() {
    std::cerr <<
        "usage: modify <command> [options]\n"
        "\n"
        "commands:\n"
        "  gen-data      generate the synthetic dataset and write .mdfy files\n"
        "  train         run one training configuration\n"
        "  ablation      run all six modes over one or more seeds\n"
        "  flow-channel  windowed capability/augmentation series from a full-mode run\n"
        "  loss-curves   combined loss curves from no-DA / modify / strong-DA runs\n"
        "  verify        run the acceptance suite\n"
        "\n"
        "options:\n"
        "  --config FILE          flat key=value config file\n"
        "  --<key> VALUE          override any config key (kebab-case, e.g. --t-easy 0.1)\n"
        "  --seeds LIST           ablation seeds, comma separated (default: 1,2,3,4,5)\n"
        "  --jobs N               parallel runs for ablation/verify (default 1 / 2)\n"
        "  --run DIR              flow-channel: run directory holding metrics.csv\n"
        "  --no-da/--modify/--strong-da DIR   loss-curves: the three run directories\n"
        "  --window N             aggregation window (flow-channel 50, loss-curves 100)\n"
        "  --out DIR              output directory for plot commands (default: first run dir)\n"
        "  --no-timestamp         omit the timestamp comment from SVG output\n"
        "  --only LIST            verify: run only these criterion numbers\n"
        "\n"
        "The MODIFY_OUT environment variable overrides the output root (out_dir).\n";
}

std::string kebab_to_snake(std::string s) {
    for (char& c : s) c = c == '-' ? '_' : c;
    return s;
}

bool is_config_key(const std::string& key) {
    for (const auto& k : config_keys())
        if (k == key) return true;
    return false;
}

struct CliArgs {
    std::vector<ConfigEntry> file_entries;
    std::vector<ConfigEntry> flag_entries;
    std::string seeds = "1,2,3,4,5";
    std::size_t jobs = 0;  // 0: command default
    std::string run_dir;
    std::string no_da_dir, modify_dir, strong_da_dir;
    std::optional<std::size_t> window;
    std::string out;
    bool timestamp = true;
    std::string only;
};

CliArgs parse_cli(int argc, char** argv, int first) {
    CliArgs args;
    std::vector<ConfigEntry> overrides;
    for (int i = first; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0)
            throw ConfigError("", "unexpected argument '" + arg + "'");
        arg = arg.substr(2);
        auto need_value = [&](const char* name) -> std::string {
            if (i + 1 >= argc) throw ConfigError(name, std::string("flag --") + name +
                                                           " needs a value");
            return argv[++i];
        };
        if (arg == "no-timestamp") {
            args.timestamp = false;
        } else if (arg == "config") {
            args.file_entries = read_config_file(need_value("config"));
        } else if (arg == "seeds") {
            args.seeds = need_value("seeds");
        } else if (arg == "jobs") {
            args.jobs = std::stoul(need_value("jobs"));
        } else if (arg == "run") {
            args.run_dir = need_value("run");
        } else if (arg == "no-da") {
            args.no_da_dir = need_value("no-da");
        } else if (arg == "modify") {
            args.modify_dir = need_value("modify");
        } else if (arg == "strong-da") {
            args.strong_da_dir = need_value("strong-da");
        } else if (arg == "window") {
            args.window = std::stoul(need_value("window"));
        } else if (arg == "out") {
            args.out = need_value("out");
        } else if (arg == "only") {
            args.only = need_value("only");
        } else {
            const std::string key = kebab_to_snake(arg);
            if (!is_config_key(key))
                throw ConfigError(key, "unknown flag '--" + arg + "' (no config key '" + key +
                                           "')");
            overrides.emplace_back(key, need_value(arg.c_str()));
        }
    }
    // Environment output root sits between file and explicit flags.
    if (const char* env_out = std::getenv("MODIFY_OUT"); env_out && *env_out)
        args.flag_entries.emplace_back("out_dir", env_out);
    args.flag_entries.insert(args.flag_entries.end(), overrides.begin(), overrides.end());
    return args;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto comma = text.find(',', pos);
        const std::string token = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                              : comma - pos);
        if (!token.empty()) seeds.push_back(std::stoull(token));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (seeds.empty()) throw ConfigError("seeds", "empty seed list");
    return seeds;
}

TrainConfig load_run_config(const std::string& run_dir) {
    const std::string path = run_dir + "/config_used.cfg";
    if (!fs::exists(path))
        throw EmissionError("run directory '" + run_dir + "' has no config_used.cfg");
    std::vector<ConfigEntry> entries = read_config_file(path);
    // Stored configs may have empty optional values.
    std::erase_if(entries, [](const ConfigEntry& e) { return e.second.empty(); });
    return parse_config(entries, {}, /*require_mode=*/false);
}

int cmd_gen_data(const CliArgs& args) {
    const TrainConfig config = parse_config(args.file_entries, args.flag_entries,
                                            /*require_mode=*/false);
    const DatasetSplit split = generate_dataset(config.dataset_config());
    fs::create_directories(config.out_dir);
    const auto classes = static_cast<std::uint16_t>(config.classes);
    const std::string train_path = config.out_dir + "/train.mdfy";
    dump_samples(train_path, split.train, classes);
    std::cout << train_path << " (" << split.train.size() << " samples)\n";
    for (const auto& domain : split.eval_domains) {
        const std::string path = config.out_dir + "/eval_" + domain.name + ".mdfy";
        dump_samples(path, domain.samples, classes);
        std::cout << path << " (" << domain.samples.size() << " samples)\n";
    }
    return 0;
}

int cmd_train(const CliArgs& args) {
    const TrainConfig config = parse_config(args.file_entries, args.flag_entries);
    const RunOutput output = run_single(config, /*write_metrics=*/true, /*resume=*/false);
    std::cout << "run " << output.dir << " finished in " << output.seconds << " s\n";
    for (const auto& [domain, accuracy] : output.accuracies)
        std::cout << "  " << domain << ": " << accuracy << "\n";
    return 0;
}

int cmd_ablation(const CliArgs& args) {
    const TrainConfig config = parse_config(args.file_entries, args.flag_entries,
                                            /*require_mode=*/false);
    const auto seeds = parse_seed_list(args.seeds);
    const std::size_t jobs = args.jobs == 0 ? 1 : args.jobs;
    const AblationReport report = run_ablation(config, seeds, jobs, std::cout);
    std::cout << "wrote " << config.out_dir << "/ablation.csv and ablation_summary.csv\n";
    for (Mode mode : all_modes())
        std::cout << "  " << mode_name(mode)
                  << " mean target accuracy: " << report.mean_target_accuracy(mode) << "\n";
    return 0;
}

int cmd_flow_channel(const CliArgs& args) {
    if (args.run_dir.empty()) throw ConfigError("run", "flow-channel needs --run DIR");
    const TrainConfig run_config = load_run_config(args.run_dir);
    if (!run_config.mode || *run_config.mode != Mode::Full)
        throw EmissionError("flow-channel needs a full-mode run, got mode '" +
                            (run_config.mode ? mode_name(*run_config.mode) : "unset") + "'");
    const auto metrics = read_metrics_csv(args.run_dir + "/metrics.csv");
    const std::string out = args.out.empty() ? args.run_dir : args.out;
    const std::size_t rows = emit_flow_channel(metrics, out, args.window.value_or(50),
                                               args.timestamp);
    std::cout << "wrote " << out << "/flow_channel.csv (" << rows << " windows) and "
              << out << "/flow_channel.svg\n";
    return 0;
}

int cmd_loss_curves(const CliArgs& args) {
    if (args.no_da_dir.empty() || args.modify_dir.empty() || args.strong_da_dir.empty())
        throw ConfigError("", "loss-curves needs --no-da, --modify and --strong-da run dirs");
    const TrainConfig a = load_run_config(args.no_da_dir);
    const TrainConfig b = load_run_config(args.modify_dir);
    const TrainConfig c = load_run_config(args.strong_da_dir);
    auto fingerprint = [](const TrainConfig& cfg) {
        return std::to_string(cfg.seed) + "/" + std::to_string(cfg.n_train) + "/" +
               std::to_string(cfg.n_eval) + "/" + std::to_string(cfg.targets) + "/" +
               std::to_string(cfg.image_size) + "/" + std::to_string(cfg.classes);
    };
    if (fingerprint(a) != fingerprint(b) || fingerprint(a) != fingerprint(c))
        throw EmissionError("loss-curves: the three runs use different seeds or datasets");
    const auto no_da = read_metrics_csv(args.no_da_dir + "/metrics.csv");
    const auto modify_log = read_metrics_csv(args.modify_dir + "/metrics.csv");
    const auto strong = read_metrics_csv(args.strong_da_dir + "/metrics.csv");
    const std::string out = args.out.empty() ? args.no_da_dir : args.out;
    const std::size_t rows = emit_loss_curves(no_da, modify_log, strong, out,
                                              args.window.value_or(100), args.timestamp);
    std::cout << "wrote " << out << "/loss_curves.csv (" << rows << " iterations) and "
              << out << "/loss_curves.svg\n";
    return 0;
}

int cmd_verify(const CliArgs& args) {
    acceptance::Options options;
    const TrainConfig config = parse_config(args.file_entries, args.flag_entries,
                                            /*require_mode=*/false);
    options.work_dir = config.out_dir == "runs" ? "acceptance_out" : config.out_dir;
    if (args.jobs != 0) options.jobs = args.jobs;
    if (!args.only.empty())
        for (std::uint64_t v : parse_seed_list(args.only))
            options.only.push_back(static_cast<int>(v));
    const int failed = acceptance::run_all(options);
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage();
        return kExitConfig;
    }
    const std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
        print_usage();
        return 0;
    }
    try {
        const CliArgs args = parse_cli(argc, argv, 2);
        if (command == "gen-data") return cmd_gen_data(args);
        if (command == "train") return cmd_train(args);
        if (command == "ablation") return cmd_ablation(args);
        if (command == "flow-channel") return cmd_flow_channel(args);
        if (command == "loss-curves") return cmd_loss_curves(args);
        if (command == "verify") return cmd_verify(args);
        std::cerr << "unknown command '" << command << "'\n";
        print_usage();
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DivergenceError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const EmissionError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
