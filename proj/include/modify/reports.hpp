#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "modify/trainer.hpp"

namespace modify {

// Data/emission problem; the CLI maps this to exit code 3.
struct EmissionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// metrics.csv: one row per sample per iteration, header
// iter,epoch,sample_id,loss_da,loss_no,d_da,d_no,degree,applied,w,m_c,lr
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& metrics);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

// Per-iteration training loss: mean loss_no over each iteration's rows.
std::vector<double> per_iteration_loss(const std::vector<MetricsRecord>& metrics);

// Trailing mean with the given window; window 1 reproduces the input.
std::vector<double> trailing_mean(const std::vector<double>& values, std::size_t window);

struct FlowChannelRow {
    std::size_t window_start_iter = 0;
    double mean_m_c = 0.0;
    double mean_degree = 0.0;
    double mean_applied_rate = 0.0;
};

// Windowed averages of capability and realized augmentation over the log,
// including a trailing partial window. Throws EmissionError on an empty log.
std::vector<FlowChannelRow> flow_channel_windows(const std::vector<MetricsRecord>& metrics,
                                                 std::size_t window = 50);

// Writes flow_channel.csv and flow_channel.svg (scatter of capability vs
// applied rate, colored red -> blue by window index) under out_dir.
// Returns the number of windows.
std::size_t emit_flow_channel(const std::vector<MetricsRecord>& metrics,
                              const std::string& out_dir, std::size_t window = 50,
                              bool timestamp = true);

// Writes loss_curves.csv (iter, loss_no_da, loss_modify, loss_strong_da with
// a trailing mean of `window`) and loss_curves.svg under out_dir. The three
// logs must cover the same number of iterations; throws EmissionError
// otherwise. Returns the iteration count.
std::size_t emit_loss_curves(const std::vector<MetricsRecord>& no_da,
                             const std::vector<MetricsRecord>& modify,
                             const std::vector<MetricsRecord>& strong_da,
                             const std::string& out_dir, std::size_t window = 100,
                             bool timestamp = true);

}  // namespace modify
