#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modify/loss_bank.hpp"
#include "modify/numerics.hpp"
#include "modify/scheduler.hpp"
#include "modify/synthdata.hpp"

namespace modify {

// The six training configurations of the component ablation: each one toggles
// RGB shuffle, the difficulty-gated augmentation (DA), and the loss gate (NO).
enum class Mode {
    Baseline,       // no augmentation, every sample trains
    ShuffleAlways,  // RGB shuffle on every sample
    DaOnly,         // shuffle gated by augmentation degree 1 - d
    NoOnly,         // shuffle on every sample + loss gate
    NoOnlyNoaug,    // no augmentation + loss gate
    Full,           // degree-gated shuffle + loss gate
};

const std::vector<Mode>& all_modes();
std::string mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

// Thrown when a loss turns non-finite; the run cannot continue.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One log row per sample per iteration.
struct MetricsRecord {
    std::uint32_t iter = 0;
    std::uint32_t epoch = 0;
    std::uint32_t sample_id = 0;
    double loss_da = 0.0;  // original-image loss; mirrors loss_no in modes without a DA flow
    double loss_no = 0.0;  // loss of the image actually trained on
    double d_da = 0.0;
    double d_no = 0.0;
    double degree = 0.0;  // augmentation probability used
    bool applied = false;
    double w = 1.0;
    double m_c = 0.0;
    double lr = 0.0;
};

struct TrainSettings {
    Mode mode = Mode::Baseline;
    std::uint64_t seed = 1;
    std::size_t epochs = 30;
    std::size_t batch = 8;
    double lambda = 0.5;
    std::optional<double> alpha;  // default: 0, below any reachable loss
    GateThresholds thresholds;
    double base_lr = 2.5e-4;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double poly_power = 0.9;
    DatasetConfig dataset;
    bool jitter = false;          // extended augmentation: brightness/contrast
    bool capture_metrics = true;  // keep per-iteration records in the result

    double effective_alpha() const;
};

// Hidden layer widths of the classifier; the input is the flattened raster
// and the output one logit per class.
std::vector<std::size_t> network_dims(const DatasetConfig& dataset);

// Mutable state of one run, stepped batch by batch.
struct TrainState {
    TrainSettings settings;
    ParameterSet params;
    Gradient grad;  // gradient + momentum buffers
    LossBank bank;
    CapabilityTracker tracker;
    OptimizerState opt;
    std::size_t epoch = 0;
};

TrainState make_train_state(const TrainSettings& settings, std::size_t n_train);

// One mini-batch through the dual-flow pipeline:
//   forward originals -> difficulty of each original loss -> bank update ->
//   degree-gated augmentation -> forward augmented -> difficulty -> loss
//   gate -> one optimizer step on the gated mean loss -> capability record.
// Difficulty queries see the bank as it was before this batch's updates, and
// only original-image losses ever write the bank. When every gate weight is
// zero the optimizer step is skipped entirely. Modes without a bank flow
// (Baseline, ShuffleAlways) skip the first three stages.
std::vector<MetricsRecord> train_batch(TrainState& state,
                                       const std::vector<const Sample*>& batch);

// Single-sample step: a batch of one.
MetricsRecord train_step(TrainState& state, const Sample& sample);

// Fraction of samples whose argmax logit matches the label.
double evaluate(const ParameterSet& params, const std::vector<Sample>& samples);

struct RunResult {
    ParameterSet params;
    std::vector<std::pair<std::string, double>> accuracies;  // eval domain -> accuracy
    std::vector<MetricsRecord> metrics;
    double seconds = 0.0;
};

// Full run: epochs over a per-epoch reshuffled order, then evaluation on all
// eval domains. Pass a pre-generated dataset to share it across runs; it must
// match the settings' dataset config. When final_state is non-null it
// receives the end-of-run state (bank, tracker, optimizer counters).
RunResult train(const TrainSettings& settings, const DatasetSplit* dataset = nullptr,
                std::optional<TrainState>* final_state = nullptr);

// Binary snapshot of a run's state (parameters, momentum, bank, tracker,
// optimizer counters, settings hash inputs). Written at the end of training.
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

// Network input matrix: one row per sample, pixels shifted from [0, 1] to
// [-0.5, 0.5]. Training and evaluation both feed the network through this.
Matrix model_inputs(const std::vector<const Sample*>& samples);

}  // namespace modify
