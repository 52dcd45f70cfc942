#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace modify {

// Fraction of bank entries ranking strictly below a query loss, in [0, 1].
struct DifficultyDegree {
    double d = 0.0;
};

// Fixed-length register of momentum-smoothed per-sample losses, one slot per
// training sample, indexed by sample id. Slots start at `alpha` and move as
//   V <- lambda * V + (1 - lambda) * loss
// on each update. Difficulty of a loss is its relative rank in the bank:
// the fraction of slots strictly below it, so a larger loss ranks harder.
// Ties count as not-below, and the query's own slot participates like any
// other. Queries are read-only.
class LossBank {
public:
    LossBank(std::size_t n, double alpha, double lambda);

    std::size_t size() const { return values_.size(); }
    double lambda() const { return lambda_; }
    double alpha() const { return alpha_; }
    double value(std::size_t id) const;
    bool seen(std::size_t id) const;
    const std::vector<double>& values() const { return values_; }

    // Momentum update of one slot; marks it seen. Throws on out-of-range id
    // or non-finite loss (a non-finite loss means training diverged).
    void update(std::size_t id, double loss);

    // Rank of `loss` among the bank entries. Throws on non-finite loss.
    DifficultyDegree difficulty(double loss) const;

    // Flat binary state (values + lambda + alpha + seen bits), for checkpoints.
    std::vector<std::uint8_t> serialize() const;
    static LossBank deserialize(const std::vector<std::uint8_t>& bytes);

private:
    std::vector<double> values_;
    std::vector<std::uint8_t> seen_;
    double alpha_;
    double lambda_;
};

}  // namespace modify
