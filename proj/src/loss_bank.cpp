#include "modify/loss_bank.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace modify {

LossBank::LossBank(std::size_t n, double alpha, double lambda)
    : values_(n, alpha), seen_(n, 0), alpha_(alpha), lambda_(lambda) {
    if (n == 0) throw std::invalid_argument("LossBank: size must be at least 1");
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw std::invalid_argument("LossBank: lambda " + std::to_string(lambda) +
                                    " outside [0, 1)");
    if (!std::isfinite(alpha))
        throw std::invalid_argument("LossBank: alpha must be finite");
}

double LossBank::value(std::size_t id) const {
    if (id >= values_.size())
        throw std::out_of_range("LossBank: id " + std::to_string(id) + " >= size " +
                                std::to_string(values_.size()));
    return values_[id];
}

bool LossBank::seen(std::size_t id) const {
    if (id >= seen_.size())
        throw std::out_of_range("LossBank: id " + std::to_string(id) + " >= size " +
                                std::to_string(seen_.size()));
    return seen_[id] != 0;
}

void LossBank::update(std::size_t id, double loss) {
    if (id >= values_.size())
        throw std::out_of_range("LossBank: update id " + std::to_string(id) +
                                " >= size " + std::to_string(values_.size()));
    if (!std::isfinite(loss))
        throw std::invalid_argument("LossBank: non-finite loss in update (training diverged?)");
    values_[id] = lambda_ * values_[id] + (1.0 - lambda_) * loss;
    seen_[id] = 1;
}

DifficultyDegree LossBank::difficulty(double loss) const {
    if (!std::isfinite(loss))
        throw std::invalid_argument("LossBank: non-finite loss in difficulty query");
    std::size_t below = 0;
    for (double v : values_)
        if (v < loss) ++below;
    return {static_cast<double>(below) / static_cast<double>(values_.size())};
}

std::vector<std::uint8_t> LossBank::serialize() const {
    const std::uint64_t n = values_.size();
    std::vector<std::uint8_t> bytes;
    bytes.resize(sizeof(std::uint64_t) + 2 * sizeof(double) + n * sizeof(double) + n);
    std::uint8_t* p = bytes.data();
    std::memcpy(p, &n, sizeof n);
    p += sizeof n;
    std::memcpy(p, &lambda_, sizeof lambda_);
    p += sizeof lambda_;
    std::memcpy(p, &alpha_, sizeof alpha_);
    p += sizeof alpha_;
    std::memcpy(p, values_.data(), n * sizeof(double));
    p += n * sizeof(double);
    std::memcpy(p, seen_.data(), n);
    return bytes;
}

LossBank LossBank::deserialize(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t n = 0;
    if (bytes.size() < sizeof n + 2 * sizeof(double))
        throw std::invalid_argument("LossBank: truncated state");
    const std::uint8_t* p = bytes.data();
    std::memcpy(&n, p, sizeof n);
    p += sizeof n;
    if (bytes.size() != sizeof n + 2 * sizeof(double) + n * sizeof(double) + n)
        throw std::invalid_argument("LossBank: state size mismatch");
    double lambda = 0.0, alpha = 0.0;
    std::memcpy(&lambda, p, sizeof lambda);
    p += sizeof lambda;
    std::memcpy(&alpha, p, sizeof alpha);
    p += sizeof alpha;
    LossBank bank(n, alpha, lambda);
    std::memcpy(bank.values_.data(), p, n * sizeof(double));
    p += n * sizeof(double);
    std::memcpy(bank.seen_.data(), p, n);
    return bank;
}

}  // namespace modify
