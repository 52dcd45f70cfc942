#include "acceptance.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <sstream>

#include "modify/augment.hpp"
#include "modify/config.hpp"
#include "modify/experiments.hpp"
#include "modify/loss_bank.hpp"
#include "modify/reports.hpp"
#include "modify/scheduler.hpp"
#include "modify/trainer.hpp"
#include "support/oracles.hpp"

namespace modify::acceptance {

namespace {

namespace fs = std::filesystem;

struct CriterionResult {
    bool pass = false;
    std::string detail;
};

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool condition, const std::string& label) {
        if (!condition) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += "FAILED " + label;
        }
    }
    void note(const std::string& text) {
        if (!detail.empty()) detail += "; ";
        detail += text;
    }
};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// ---- shared training runs -------------------------------------------------

constexpr std::array<std::uint64_t, 5> kSeeds = {1, 2, 3, 4, 5};

struct RunSummary {
    double mean_target = 0.0;
    double terminal_loss = 0.0;  // mean per-iteration loss over the last 10%
    double seconds = 0.0;
};

struct RunKey {
    Mode mode;
    bool jitter;
    std::uint64_t seed;
    auto operator<=>(const RunKey&) const = default;
};

class RunCache {
public:
    explicit RunCache(std::size_t jobs) : jobs_(jobs == 0 ? 1 : jobs) {}

    // Executes all requested runs (in parallel) that are not cached yet.
    void prefetch(const std::vector<RunKey>& keys) {
        std::vector<RunKey> missing;
        for (const auto& key : keys)
            if (!cache_.count(key)) missing.push_back(key);
        if (missing.empty()) return;
        for (const auto& key : missing) (void)dataset(key.seed);

        std::atomic<std::size_t> next{0};
        std::mutex mutex;
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= missing.size()) return;
                RunSummary summary = execute(missing[i]);
                std::scoped_lock lock(mutex);
                cache_.emplace(missing[i], summary);
            }
        };
        if (jobs_ == 1 || missing.size() == 1) {
            worker();
        } else {
            std::vector<std::future<void>> futures;
            for (std::size_t j = 0; j < std::min(jobs_, missing.size()); ++j)
                futures.push_back(std::async(std::launch::async, worker));
            for (auto& f : futures) f.get();
        }
    }

    const RunSummary& get(const RunKey& key) {
        prefetch({key});
        return cache_.at(key);
    }

private:
    const DatasetSplit& dataset(std::uint64_t seed) {
        auto it = datasets_.find(seed);
        if (it != datasets_.end()) return it->second;
        DatasetConfig config;
        config.seed = seed;
        return datasets_.emplace(seed, generate_dataset(config)).first->second;
    }

    RunSummary execute(const RunKey& key) {
        TrainSettings settings;
        settings.mode = key.mode;
        settings.jitter = key.jitter;
        settings.seed = key.seed;
        RunResult result = train(settings, &datasets_.at(key.seed));
        RunSummary summary;
        summary.seconds = result.seconds;
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& [domain, accuracy] : result.accuracies)
            if (domain.starts_with("target_")) {
                sum += accuracy;
                ++count;
            }
        summary.mean_target = sum / static_cast<double>(count);
        const auto losses = per_iteration_loss(result.metrics);
        const std::size_t tail = std::max<std::size_t>(1, losses.size() / 10);
        double tail_sum = 0.0;
        for (std::size_t i = losses.size() - tail; i < losses.size(); ++i) tail_sum += losses[i];
        summary.terminal_loss = tail_sum / static_cast<double>(tail);
        return summary;
    }

    std::size_t jobs_;
    std::map<RunKey, RunSummary> cache_;
    std::map<std::uint64_t, DatasetSplit> datasets_;
};

double mean_over_seeds(RunCache& cache, Mode mode, bool jitter,
                       double RunSummary::* field) {
    double sum = 0.0;
    for (auto seed : kSeeds) sum += cache.get({mode, jitter, seed}).*field;
    return sum / static_cast<double>(kSeeds.size());
}

// ---- criteria -------------------------------------------------------------

CriterionResult momentum_update_oracle() {
    Check check;
    Rng rng(101);
    for (int trial = 0; trial < 1000 && check.ok; ++trial) {
        const double prev = rng.uniform(-5.0, 5.0);
        const double lambda = rng.uniform01() * 0.999;
        const double loss = rng.uniform(-5.0, 5.0);
        LossBank bank(1, prev, lambda);
        bank.update(0, loss);
        const double expected = lambda * prev + (1.0 - lambda) * loss;
        check.require(std::abs(bank.value(0) - expected) <= 1e-12, "single update vs closed form");
    }
    double worst = 0.0;
    for (const auto& [alpha, lambda, c] :
         {std::array<double, 3>{std::log(4.0), 0.9, 2.5},
          std::array<double, 3>{0.0, 0.5, 1.0},
          std::array<double, 3>{3.0, 0.99, -0.5}}) {
        LossBank bank(1, alpha, lambda);
        for (int t = 1; t <= 100; ++t) {
            bank.update(0, c);
            const double expected = std::pow(lambda, t) * std::abs(alpha - c);
            worst = std::max(worst, std::abs(std::abs(bank.value(0) - c) - expected));
        }
    }
    check.require(worst <= 1e-12, "geometric convergence within 1e-12");
    check.note("max convergence error " + fmt(worst * 1e12) + "e-12");
    return {check.ok, check.detail};
}

CriterionResult difficulty_rank_oracle() {
    Check check;
    Rng rng(202);
    for (int trial = 0; trial < 1000 && check.ok; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(5000);
        LossBank bank(n, 0.0, 0.0);
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = trial % 2 == 0 ? rng.uniform(-3.0, 3.0)
                                       : std::floor(rng.uniform(-12.0, 12.0)) / 4.0;
            bank.update(i, values[i]);
        }
        const double query = trial % 2 == 0 ? rng.uniform(-3.5, 3.5)
                                            : std::floor(rng.uniform(-14.0, 14.0)) / 4.0;
        check.require(bank.difficulty(query).d == oracle::sorted_rank_fraction(values, query),
                      "rank vs sort-and-count oracle");
    }
    LossBank bank(2000, 0.0, 0.0);
    for (std::size_t i = 0; i < 2000; ++i) bank.update(i, rng.uniform(-2.0, 2.0));
    bool monotone = true;
    for (int pair = 0; pair < 100000; ++pair) {
        double a = rng.uniform(-2.5, 2.5);
        double b = rng.uniform(-2.5, 2.5);
        if (a > b) std::swap(a, b);
        if (bank.difficulty(a).d > bank.difficulty(b).d) monotone = false;
    }
    check.require(monotone, "monotonicity over 1e5 ordered pairs");
    check.note("1000 banks (N<=5000) exact, 1e5 pairs monotone");
    return {check.ok, check.detail};
}

CriterionResult gate_interval_oracle() {
    Check check;
    const GateThresholds th{0.05, 0.95};
    for (int k = 0; k <= 1000; ++k) {
        const double d = static_cast<double>(k) / 1000.0;
        const double expected = (d > 0.05 && d < 0.95) ? 1.0 : 0.0;
        if (no_gate({d}, th).w != expected) {
            check.require(false, "grid point " + fmt(d));
            break;
        }
    }
    check.require(no_gate({0.05}, th).w == 0.0, "w(0.05) == 0");
    check.require(no_gate({0.95}, th).w == 0.0, "w(0.95) == 0");
    check.require(no_gate({0.5}, th).w == 1.0, "w(0.5) == 1");
    check.require(no_gate({0.03}, th).w == 0.0, "w(0.03) == 0");
    check.require(no_gate({0.97}, th).w == 0.0, "w(0.97) == 0");
    check.note("grid d=0,0.001,...,1 exact, boundaries closed");
    return {check.ok, check.detail};
}

CriterionResult gradient_finite_difference() {
    Check check;
    Rng rng(303);
    std::size_t checked = 0;
    double worst_rel = 0.0;
    for (const auto& dims : {std::vector<std::size_t>{5, 4, 3}, {7, 3}, {6, 8, 5, 4}}) {
        auto params = ParameterSet::he_uniform(dims, rng);
        Matrix batch(4, dims.front());
        for (double& v : batch.data) v = rng.uniform01();
        std::vector<std::size_t> labels(4);
        for (auto& l : labels) l = rng.uniform_index(dims.back());
        std::vector<double> weights(4);
        for (auto& w : weights) w = rng.uniform01();
        const Gradient grad = backward(params, batch, labels, weights);
        for (std::size_t layer = 0; layer < params.layer_count(); ++layer) {
            for (std::size_t i = 0; i < params.weights[layer].data.size(); ++i) {
                const double analytic = grad.dw[layer].data[i];
                const double numeric = oracle::central_difference(
                    params, &params.weights[layer].data[i], batch, labels, weights);
                const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
                worst_rel = std::max(worst_rel, std::abs(analytic - numeric) / scale);
                ++checked;
            }
            for (std::size_t i = 0; i < params.biases[layer].size(); ++i) {
                const double analytic = grad.db[layer][i];
                const double numeric = oracle::central_difference(
                    params, &params.biases[layer][i], batch, labels, weights);
                const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
                worst_rel = std::max(worst_rel, std::abs(analytic - numeric) / scale);
                ++checked;
            }
        }
    }
    check.require(checked >= 100, "at least 100 coordinates");
    check.require(worst_rel <= 1e-4, "relative error within 1e-4");
    check.note(std::to_string(checked) + " coordinates over 3 shapes, worst rel err " +
               fmt(worst_rel * 1e6) + "e-6");
    return {check.ok, check.detail};
}

CriterionResult augmentation_statistics() {
    Check check;
    Rng img_rng(404);
    Image image(16, 16, 3);
    for (double& v : image.pixels) v = img_rng.uniform01();

    Rng rng(405);
    const int trials = 100000;
    int applied = 0;
    bool never_identity = true;
    for (int i = 0; i < trials; ++i) {
        const auto [out, decision] = maybe_augment(image, 0.3, rng);
        if (decision.applied) {
            ++applied;
            if (decision.permutation.is_identity()) never_identity = false;
        }
    }
    const double rate = static_cast<double>(applied) / trials;
    check.require(std::abs(rate - 0.3) <= 0.01, "application rate within 0.3 +- 0.01");
    check.require(never_identity, "applied augmentations never identity");

    bool laws = true;
    for (const auto& p : all_channel_permutations())
        for (const auto& q : all_channel_permutations()) {
            if (!(rgb_shuffle(rgb_shuffle(image, p), q) == rgb_shuffle(image, p.then(q))))
                laws = false;
            if (!(p.then(ChannelPermutation::identity()) == p)) laws = false;
        }
    const ChannelPermutation cycle{{1, 2, 0}};
    if (!(cycle.then(cycle).then(cycle) == ChannelPermutation::identity())) laws = false;
    check.require(laws, "permutation composition laws");
    check.note("rate " + fmt(rate) + " over 1e5 trials");
    return {check.ok, check.detail};
}

CriterionResult color_shortcut_construct() {
    Check check;
    DatasetConfig config;
    config.seed = 1;
    const auto split = generate_dataset(config);
    const auto clf = oracle::ColorCentroidClassifier::fit(split.train, config.classes);
    const double source = clf.accuracy(split.eval_domains[0].samples);
    check.require(source >= 0.99, "source eval >= 0.99");
    std::string targets;
    for (std::size_t t = 1; t < split.eval_domains.size(); ++t) {
        const double acc = clf.accuracy(split.eval_domains[t].samples);
        check.require(acc <= 0.35, split.eval_domains[t].name + " <= 0.35");
        targets += (t > 1 ? "/" : "") + fmt(acc);
    }
    check.note("source " + fmt(source) + ", targets " + targets);
    return {check.ok, check.detail};
}

CriterionResult ablation_ordering(RunCache& cache) {
    Check check;
    std::vector<RunKey> keys;
    for (auto seed : kSeeds)
        for (Mode mode : {Mode::Baseline, Mode::ShuffleAlways, Mode::Full})
            keys.push_back({mode, false, seed});
    cache.prefetch(keys);

    const double baseline = mean_over_seeds(cache, Mode::Baseline, false,
                                            &RunSummary::mean_target);
    const double shuffle = mean_over_seeds(cache, Mode::ShuffleAlways, false,
                                           &RunSummary::mean_target);
    const double full = mean_over_seeds(cache, Mode::Full, false, &RunSummary::mean_target);
    double cpu_seconds = 0.0;
    for (const auto& key : keys) cpu_seconds += cache.get(key).seconds;

    check.require(full >= shuffle, "full >= shuffle_always");
    check.require(shuffle >= baseline, "shuffle_always >= baseline");
    check.require(full - baseline >= 0.15, "full - baseline >= 0.15");
    check.require(shuffle - baseline >= 0.10, "shuffle_always - baseline >= 0.10");
    check.require(cpu_seconds < 600.0, "training cpu time < 600 s");
    check.note("mean target acc over 5 seeds: baseline " + fmt(baseline) + ", shuffle " +
               fmt(shuffle) + ", full " + fmt(full) + "; cpu " + fmt(cpu_seconds) + " s");
    return {check.ok, check.detail};
}

CriterionResult flow_channel_dynamic(const std::string& work_dir) {
    Check check;
    TrainSettings settings;
    settings.mode = Mode::Full;
    settings.seed = 1;
    settings.epochs = 12;  // 3000 iterations at the default batch: 60 windows
    RunResult result = train(settings);

    const auto rows = flow_channel_windows(result.metrics, 50);
    check.require(rows.size() >= 60, "at least 60 windows");
    std::vector<double> capability, applied_rate;
    for (const auto& row : rows) {
        capability.push_back(row.mean_m_c);
        applied_rate.push_back(row.mean_applied_rate);
    }
    const double rho = oracle::spearman(capability, applied_rate);
    check.require(rho > 0.3, "spearman(capability, applied rate) > 0.3");
    const std::size_t emitted =
        emit_flow_channel(result.metrics, work_dir + "/flow_channel", 50, false);
    check.require(emitted == rows.size(), "emitted window count");
    check.note(std::to_string(rows.size()) + " windows, spearman " + fmt(rho));
    return {check.ok, check.detail};
}

CriterionResult misfitting_ordering(RunCache& cache) {
    Check check;
    std::vector<RunKey> keys;
    for (auto seed : kSeeds) {
        keys.push_back({Mode::Baseline, false, seed});
        keys.push_back({Mode::Full, false, seed});
        keys.push_back({Mode::ShuffleAlways, true, seed});  // strong DA arm
    }
    cache.prefetch(keys);
    const double no_da = mean_over_seeds(cache, Mode::Baseline, false,
                                         &RunSummary::terminal_loss);
    const double modify = mean_over_seeds(cache, Mode::Full, false, &RunSummary::terminal_loss);
    const double strong = mean_over_seeds(cache, Mode::ShuffleAlways, true,
                                          &RunSummary::terminal_loss);
    check.require(no_da < modify, "no_da < modify");
    check.require(modify < strong, "modify < strong_da");
    check.note("terminal loss (last 10%, 5 seeds): no_da " + fmt(no_da) + " < modify " +
               fmt(modify) + " < strong_da " + fmt(strong));
    return {check.ok, check.detail};
}

CriterionResult zero_gate_and_determinism(const std::string& work_dir) {
    Check check;
    // (a) a closed gate never touches the parameters
    TrainSettings settings;
    settings.mode = Mode::Full;
    settings.seed = 7;
    settings.epochs = 2;
    settings.thresholds = {0.0, 1e-12};
    settings.dataset.n_train = 200;
    settings.dataset.n_eval = 100;
    DatasetConfig data_config = settings.dataset;
    data_config.seed = settings.seed;
    const auto data = generate_dataset(data_config);
    const TrainState fresh = make_train_state(settings, data.train.size());
    RunResult gated = train(settings, &data);
    bool all_closed = true;
    for (const auto& r : gated.metrics)
        if (r.w != 0.0) all_closed = false;
    check.require(all_closed, "every gate weight is zero");
    check.require(gated.params.bitwise_equal(fresh.params), "parameters bit-identical");

    // (b) identical configs and seeds produce byte-identical ablation CSVs
    auto read_file = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    TrainConfig base;
    base.epochs = 2;
    base.batch = 8;
    base.n_train = 80;
    base.n_eval = 40;
    std::ostringstream sink;
    base.out_dir = work_dir + "/determinism_a";
    fs::remove_all(base.out_dir);
    (void)run_ablation(base, {9}, 2, sink);
    TrainConfig again = base;
    again.out_dir = work_dir + "/determinism_b";
    fs::remove_all(again.out_dir);
    (void)run_ablation(again, {9}, 1, sink);
    const std::string csv_a = read_file(base.out_dir + "/ablation.csv");
    check.require(!csv_a.empty() && csv_a == read_file(again.out_dir + "/ablation.csv"),
                  "ablation.csv byte-identical across reruns");
    check.require(read_file(base.out_dir + "/ablation_summary.csv") ==
                      read_file(again.out_dir + "/ablation_summary.csv"),
                  "ablation_summary.csv byte-identical across reruns");
    check.note("closed-gate run left parameters untouched; rerun CSVs byte-identical");
    return {check.ok, check.detail};
}

}  // namespace

int run_all(const Options& options) {
    fs::create_directories(options.work_dir);
    RunCache cache(options.jobs);

    struct Criterion {
        int number;
        const char* name;
        double limit_seconds;
        std::function<CriterionResult()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "momentum bank update matches the closed form", 1.0,
         [] { return momentum_update_oracle(); }},
        {2, "difficulty equals the sort-and-count rank oracle", 5.0,
         [] { return difficulty_rank_oracle(); }},
        {3, "loss gate matches the open-interval indicator", 1.0,
         [] { return gate_interval_oracle(); }},
        {4, "analytic gradients match central finite differences", 10.0,
         [] { return gradient_finite_difference(); }},
        {5, "augmentation statistics and permutation laws", 5.0,
         [] { return augmentation_statistics(); }},
        {6, "color-centroid shortcut nails source, fails targets", 5.0,
         [] { return color_shortcut_construct(); }},
        {7, "ablation ordering: full >= shuffle >= baseline with margins", 600.0,
         [&] { return ablation_ordering(cache); }},
        {8, "flow channel: capability and applied rate co-rise", 120.0,
         [&] { return flow_channel_dynamic(options.work_dir); }},
        {9, "terminal loss ordering: no_da < modify < strong_da", 360.0,
         [&] { return misfitting_ordering(cache); }},
        {10, "zero-gate no-op and byte-identical reruns", 120.0,
         [&] { return zero_gate_and_determinism(options.work_dir); }},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (!options.only.empty() &&
            std::find(options.only.begin(), options.only.end(), criterion.number) ==
                options.only.end())
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult result;
        try {
            result = criterion.run();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // wall-time guard; criterion 7 additionally checks its cpu budget
        if (elapsed > criterion.limit_seconds && result.pass) {
            result.pass = false;
            result.detail += "; exceeded " + fmt(criterion.limit_seconds) + " s wall limit";
        }
        if (!result.pass) ++failures;
        std::printf("[%s] %2d. %s (%.1f s)\n", result.pass ? "PASS" : "FAIL", criterion.number,
                    criterion.name, elapsed);
        if (!result.detail.empty()) std::printf("          %s\n", result.detail.c_str());
        std::fflush(stdout);
    }
    if (failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criteria FAILED\n", failures);
    return failures;
}

}  // namespace modify::acceptance
