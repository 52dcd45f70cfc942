#include "modify/scheduler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace modify {

void validate_thresholds(const GateThresholds& th) {
    if (!(th.t_easy >= 0.0 && th.t_easy < th.t_hard && th.t_hard <= 1.0))
        throw std::invalid_argument("thresholds: need 0 <= t_easy < t_hard <= 1, got t_easy=" +
                                    std::to_string(th.t_easy) + " t_hard=" +
                                    std::to_string(th.t_hard));
}

double da_degree(DifficultyDegree d_da) {
    return 1.0 - d_da.d;
}

GateWeight no_gate(DifficultyDegree d_no, const GateThresholds& th) {
    return {(d_no.d > th.t_easy && d_no.d < th.t_hard) ? 1.0 : 0.0};
}

void CapabilityTracker::observe(double loss) {
    if (!std::isfinite(loss))
        throw std::invalid_argument("CapabilityTracker: non-finite loss");
    if (count_ == 0) {
        min_ = max_ = loss;
    } else {
        if (loss < min_) min_ = loss;
        if (loss > max_) max_ = loss;
    }
    ++count_;
}

CapabilityTracker CapabilityTracker::restore(double min, double max, std::size_t count) {
    if (count > 0 && !(min <= max))
        throw std::invalid_argument("CapabilityTracker: restored min exceeds max");
    CapabilityTracker t;
    t.min_ = min;
    t.max_ = max;
    t.count_ = count;
    return t;
}

double CapabilityTracker::capability(double loss) const {
    if (!std::isfinite(loss))
        throw std::invalid_argument("CapabilityTracker: non-finite loss");
    if (count_ == 0)
        throw std::logic_error("CapabilityTracker: capability queried before any observation");
    if (max_ == min_) return 0.5;
    return 1.0 - (loss - min_) / (max_ - min_);
}

}  // namespace modify
