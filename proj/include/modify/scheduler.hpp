#pragma once

#include <cstddef>

#include "modify/loss_bank.hpp"

namespace modify {

// Acceptance band for the loss gate. A sample trains only when its
// difficulty lies strictly inside (t_easy, t_hard); both boundaries gate
// the sample out.
struct GateThresholds {
    double t_easy = 0.05;
    double t_hard = 0.95;
};

// Throws unless 0 <= t_easy < t_hard <= 1.
void validate_thresholds(const GateThresholds& th);

// Binary per-sample loss weight.
struct GateWeight {
    double w = 1.0;
};

// Augmentation degree of a sample: the complement 1 - d of its difficulty,
// used as the probability of augmenting it. Easy samples get augmented,
// hard ones pass through unchanged.
double da_degree(DifficultyDegree d_da);

// Loss gate: w = 1 iff t_easy < d < t_hard. Over-easy samples are dropped;
// over-hard ones come back in a later epoch once their rank falls.
GateWeight no_gate(DifficultyDegree d_no, const GateThresholds& th);

// Running loss extrema across training, feeding the capability diagnostic
//   M_c = 1 - (L - L_min) / (L_max - L_min).
// Diagnostic only; it never influences scheduling.
class CapabilityTracker {
public:
    // loss_min <- min(loss_min, loss), loss_max <- max(loss_max, loss).
    void observe(double loss);

    // Requires the extrema to already include `loss` (observe first).
    // Returns 0.5 when max == min, which only happens before the extrema
    // have spread.
    double capability(double loss) const;

    bool has_observation() const { return count_ > 0; }
    double loss_min() const { return min_; }
    double loss_max() const { return max_; }
    std::size_t observation_count() const { return count_; }

    // Rebuild from checkpointed state.
    static CapabilityTracker restore(double min, double max, std::size_t count);

private:
    double min_ = 0.0;
    double max_ = 0.0;
    std::size_t count_ = 0;
};

}  // namespace modify
