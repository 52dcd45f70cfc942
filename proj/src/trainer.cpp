#include "modify/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>

#include "modify/augment.hpp"
#include "modify/rng.hpp"

namespace modify {

namespace {

bool mode_uses_bank(Mode mode) {
    switch (mode) {
        case Mode::Baseline:
        case Mode::ShuffleAlways:
            return false;
        default:
            return true;
    }
}

bool mode_uses_gate(Mode mode) {
    return mode == Mode::NoOnly || mode == Mode::NoOnlyNoaug || mode == Mode::Full;
}

void check_finite(const std::vector<double>& losses, const TrainState& state, const char* stage) {
    for (double l : losses)
        if (!std::isfinite(l))
            throw DivergenceError("training diverged: non-finite " + std::string(stage) +
                                  " loss at iter " + std::to_string(state.opt.iter) +
                                  " (epoch " + std::to_string(state.epoch) + ")");
}

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    return value;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    write_raw<std::uint64_t>(out, m.rows);
    write_raw<std::uint64_t>(out, m.cols);
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

Matrix read_matrix(std::istream& in) {
    const auto rows = read_raw<std::uint64_t>(in);
    const auto cols = read_raw<std::uint64_t>(in);
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    return m;
}

void write_vector(std::ostream& out, const std::vector<double>& v) {
    write_raw<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vector(std::istream& in) {
    const auto n = read_raw<std::uint64_t>(in);
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

}  // namespace

const std::vector<Mode>& all_modes() {
    static const std::vector<Mode> modes = {Mode::Baseline,    Mode::ShuffleAlways,
                                            Mode::DaOnly,      Mode::NoOnly,
                                            Mode::NoOnlyNoaug, Mode::Full};
    return modes;
}

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::Baseline: return "baseline";
        case Mode::ShuffleAlways: return "shuffle_always";
        case Mode::DaOnly: return "da_only";
        case Mode::NoOnly: return "no_only";
        case Mode::NoOnlyNoaug: return "no_only_noaug";
        case Mode::Full: return "full";
    }
    throw std::invalid_argument("mode_name: unknown mode");
}

Mode mode_from_name(const std::string& name) {
    for (Mode m : all_modes())
        if (mode_name(m) == name) return m;
    throw std::invalid_argument("unknown mode '" + name +
                                "' (expected baseline, shuffle_always, da_only, no_only, "
                                "no_only_noaug or full)");
}

double TrainSettings::effective_alpha() const {
    // Zero sits below every cross-entropy loss, so untouched slots read as
    // "easiest possible" and early samples rank hard: augmentation and the
    // gate then ease in as real losses fill the bank.
    return alpha.value_or(0.0);
}

std::vector<std::size_t> network_dims(const DatasetConfig& dataset) {
    const std::size_t input = dataset.image_size * dataset.image_size * 3;
    return {input, 256, dataset.classes};
}

TrainState make_train_state(const TrainSettings& settings, std::size_t n_train) {
    validate_thresholds(settings.thresholds);
    TrainState state{.settings = settings,
                     .params = {},
                     .grad = {},
                     .bank = LossBank(n_train, settings.effective_alpha(), settings.lambda),
                     .tracker = {},
                     .opt = {},
                     .epoch = 0};
    Rng init_rng(mix_seed(settings.seed, stream::init));
    state.params = ParameterSet::he_uniform(network_dims(settings.dataset), init_rng);
    // Feature layer widened, readout damped: at the small fixed learning
    // rate this trains the flattened-raster task within the epoch budget.
    for (double& v : state.params.weights.front().data) v *= 3.0;
    for (double& v : state.params.weights.back().data) v *= 0.1;
    state.grad = Gradient::zeros_like(state.params);
    state.opt.base_lr = settings.base_lr;
    state.opt.momentum = settings.momentum;
    state.opt.weight_decay = settings.weight_decay;
    state.opt.power = settings.poly_power;
    state.opt.iter = 0;
    const std::size_t batches_per_epoch = (n_train + settings.batch - 1) / settings.batch;
    state.opt.max_iter = settings.epochs * batches_per_epoch;
    return state;
}

Matrix model_inputs(const std::vector<const Sample*>& samples) {
    if (samples.empty()) throw std::invalid_argument("model_inputs: empty batch");
    const std::size_t dim = samples.front()->image.pixels.size();
    Matrix x(samples.size(), dim);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& px = samples[i]->image.pixels;
        if (px.size() != dim) throw std::invalid_argument("model_inputs: inconsistent image sizes");
        double* row = x.row(i);
        for (std::size_t p = 0; p < dim; ++p) row[p] = px[p] - 0.5;
    }
    return x;
}

std::vector<MetricsRecord> train_batch(TrainState& state,
                                       const std::vector<const Sample*>& batch) {
    if (batch.empty()) throw std::invalid_argument("train_batch: empty batch");
    const Mode mode = state.settings.mode;
    const std::size_t n = batch.size();
    const bool uses_bank = mode_uses_bank(mode);

    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = batch[i]->label;

    // DA flow: loss of the untouched image, its rank, and the bank update.
    // No backprop happens here. Ranks are taken against the bank as of the
    // start of the batch; the updates land afterwards.
    std::vector<double> loss_da(n, 0.0);
    std::vector<double> d_da(n, 0.0);
    if (uses_bank) {
        const Matrix originals = model_inputs(batch);
        const Matrix logits = forward(state.params, originals);
        loss_da = cross_entropy(logits, labels);
        check_finite(loss_da, state, "original-image");
        for (std::size_t i = 0; i < n; ++i) d_da[i] = state.bank.difficulty(loss_da[i]).d;
        for (std::size_t i = 0; i < n; ++i) state.bank.update(batch[i]->id, loss_da[i]);
    }

    // Augmentation with a per-(sample, epoch) stream so that gate or degree
    // changes in one mode never shift the draws of another.
    std::vector<double> degree(n, 0.0);
    std::vector<MetricsRecord> records(n);
    std::vector<const Sample*> augmented_view(n);
    std::vector<Sample> augmented(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (mode) {
            case Mode::Baseline:
            case Mode::NoOnlyNoaug:
                degree[i] = 0.0;
                break;
            case Mode::ShuffleAlways:
            case Mode::NoOnly:
                degree[i] = 1.0;
                break;
            case Mode::DaOnly:
            case Mode::Full:
                degree[i] = da_degree({d_da[i]});
                break;
        }
        Rng aug_rng(mix_seed(mix_seed(state.settings.seed, stream::augment),
                             mix_seed(batch[i]->id, state.epoch)));
        auto [img, decision] = maybe_augment(batch[i]->image, degree[i], aug_rng);
        if (state.settings.jitter) img = jitter(img, degree[i], aug_rng);
        augmented[i] = *batch[i];
        augmented[i].image = std::move(img);
        augmented_view[i] = &augmented[i];
        records[i].applied = decision.applied;
    }

    // NO flow: loss of the trained image, its rank, and the binary gate.
    const Matrix trained_batch = model_inputs(augmented_view);
    const Matrix logits_no = forward(state.params, trained_batch);
    std::vector<double> loss_no = cross_entropy(logits_no, labels);
    check_finite(loss_no, state, "trained-image");

    std::vector<double> weights(n, 1.0);
    std::vector<double> d_no(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d_no[i] = state.bank.difficulty(loss_no[i]).d;
        if (mode_uses_gate(mode))
            weights[i] = no_gate({d_no[i]}, state.settings.thresholds).w;
    }

    const double lr = poly_lr(state.opt);
    const bool any_open = std::any_of(weights.begin(), weights.end(),
                                      [](double w) { return w > 0.0; });
    if (any_open) {
        backward_into(state.params, trained_batch, labels, weights, state.grad);
        sgd_step(state.params, state.grad, state.opt);
    }

    for (std::size_t i = 0; i < n; ++i) {
        state.tracker.observe(loss_no[i]);
        MetricsRecord& r = records[i];
        r.iter = static_cast<std::uint32_t>(state.opt.iter);
        r.epoch = static_cast<std::uint32_t>(state.epoch);
        r.sample_id = batch[i]->id;
        r.loss_da = uses_bank ? loss_da[i] : loss_no[i];
        r.loss_no = loss_no[i];
        r.d_da = d_da[i];
        r.d_no = d_no[i];
        r.degree = degree[i];
        r.w = weights[i];
        r.m_c = state.tracker.capability(loss_no[i]);
        r.lr = lr;
    }
    ++state.opt.iter;
    return records;
}

MetricsRecord train_step(TrainState& state, const Sample& sample) {
    return train_batch(state, {&sample}).front();
}

double evaluate(const ParameterSet& params, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty sample list");
    constexpr std::size_t kChunk = 256;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t end = std::min(samples.size(), start + kChunk);
        std::vector<const Sample*> chunk;
        chunk.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) chunk.push_back(&samples[i]);
        const Matrix logits = forward(params, model_inputs(chunk));
        for (std::size_t i = 0; i < logits.rows; ++i) {
            const double* row = logits.row(i);
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits.cols; ++j)
                if (row[j] > row[best]) best = j;
            if (best == samples[start + i].label) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

RunResult train(const TrainSettings& settings, const DatasetSplit* dataset,
                std::optional<TrainState>* final_state) {
    const auto t0 = std::chrono::steady_clock::now();
    DatasetSplit generated;
    if (!dataset) {
        DatasetConfig data_config = settings.dataset;
        data_config.seed = settings.seed;
        generated = generate_dataset(data_config);
        dataset = &generated;
    }
    const std::size_t n_train = dataset->train.size();
    TrainState state = make_train_state(settings, n_train);

    RunResult result;
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
        state.epoch = epoch;
        Rng order_rng(mix_seed(mix_seed(settings.seed, stream::order), epoch));
        for (std::size_t i = n_train; i > 1; --i)
            std::swap(order[i - 1], order[order_rng.uniform_index(i)]);
        for (std::size_t start = 0; start < n_train; start += settings.batch) {
            const std::size_t end = std::min(n_train, start + settings.batch);
            std::vector<const Sample*> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(&dataset->train[order[i]]);
            auto records = train_batch(state, batch);
            if (settings.capture_metrics)
                result.metrics.insert(result.metrics.end(), records.begin(), records.end());
        }
    }

    for (const auto& domain : dataset->eval_domains)
        result.accuracies.emplace_back(domain.name, evaluate(state.params, domain.samples));
    result.params = state.params;
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (final_state) *final_state = std::move(state);
    return result;
}

void save_checkpoint(const std::string& path, const TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write("MDCK", 4);
    write_raw<std::uint32_t>(out, 1);
    write_raw<std::uint64_t>(out, state.settings.seed);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(state.settings.mode));
    write_raw<std::uint8_t>(out, state.settings.jitter ? 1 : 0);
    write_raw<double>(out, state.settings.thresholds.t_easy);
    write_raw<double>(out, state.settings.thresholds.t_hard);
    write_raw<std::uint64_t>(out, state.epoch);
    write_raw<double>(out, state.opt.base_lr);
    write_raw<double>(out, state.opt.momentum);
    write_raw<double>(out, state.opt.weight_decay);
    write_raw<double>(out, state.opt.power);
    write_raw<std::uint64_t>(out, state.opt.iter);
    write_raw<std::uint64_t>(out, state.opt.max_iter);

    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(state.params.layer_count()));
    for (std::size_t k = 0; k < state.params.layer_count(); ++k) {
        write_matrix(out, state.params.weights[k]);
        write_vector(out, state.params.biases[k]);
        write_matrix(out, state.grad.mw[k]);
        write_vector(out, state.grad.mb[k]);
    }

    const auto bank_bytes = state.bank.serialize();
    write_raw<std::uint64_t>(out, bank_bytes.size());
    out.write(reinterpret_cast<const char*>(bank_bytes.data()),
              static_cast<std::streamsize>(bank_bytes.size()));

    write_raw<double>(out, state.tracker.loss_min());
    write_raw<double>(out, state.tracker.loss_max());
    write_raw<std::uint64_t>(out, state.tracker.observation_count());
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

TrainState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MDCK", 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    const auto version = read_raw<std::uint32_t>(in);
    if (version != 1)
        throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));

    TrainSettings settings;
    settings.seed = read_raw<std::uint64_t>(in);
    settings.mode = static_cast<Mode>(read_raw<std::uint32_t>(in));
    settings.jitter = read_raw<std::uint8_t>(in) != 0;
    settings.thresholds.t_easy = read_raw<double>(in);
    settings.thresholds.t_hard = read_raw<double>(in);
    const auto epoch = read_raw<std::uint64_t>(in);
    OptimizerState opt;
    opt.base_lr = read_raw<double>(in);
    opt.momentum = read_raw<double>(in);
    opt.weight_decay = read_raw<double>(in);
    opt.power = read_raw<double>(in);
    opt.iter = read_raw<std::uint64_t>(in);
    opt.max_iter = read_raw<std::uint64_t>(in);
    settings.base_lr = opt.base_lr;
    settings.momentum = opt.momentum;
    settings.weight_decay = opt.weight_decay;
    settings.poly_power = opt.power;

    ParameterSet params;
    Gradient grad;
    const auto layers = read_raw<std::uint32_t>(in);
    for (std::uint32_t k = 0; k < layers; ++k) {
        params.weights.push_back(read_matrix(in));
        params.biases.push_back(read_vector(in));
        grad.mw.push_back(read_matrix(in));
        grad.mb.push_back(read_vector(in));
        grad.dw.emplace_back(params.weights.back().rows, params.weights.back().cols, 0.0);
        grad.db.emplace_back(params.biases.back().size(), 0.0);
    }

    const auto bank_size = read_raw<std::uint64_t>(in);
    std::vector<std::uint8_t> bank_bytes(bank_size);
    in.read(reinterpret_cast<char*>(bank_bytes.data()), static_cast<std::streamsize>(bank_size));
    LossBank bank = LossBank::deserialize(bank_bytes);
    settings.lambda = bank.lambda();
    settings.alpha = bank.alpha();

    const double min = read_raw<double>(in);
    const double max = read_raw<double>(in);
    const auto count = read_raw<std::uint64_t>(in);
    CapabilityTracker tracker = CapabilityTracker::restore(min, max, count);
    if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);

    TrainState state{.settings = settings,
                     .params = std::move(params),
                     .grad = std::move(grad),
                     .bank = std::move(bank),
                     .tracker = tracker,
                     .opt = opt,
                     .epoch = epoch};
    return state;
}

}  // namespace modify
