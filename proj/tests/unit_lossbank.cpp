#include <stdexcept>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "modify/loss_bank.hpp"
#include "modify/rng.hpp"
#include "support/oracles.hpp"

using namespace modify;

TEST_CASE("bank starts at alpha with nothing seen") {
    LossBank bank(4, 1.3863, 0.9);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(bank.value(i) == 1.3863);
        CHECK_FALSE(bank.seen(i));
    }
    CHECK(bank.size() == 4);
}

TEST_CASE("bank rejects empty size, bad lambda and out-of-range ids") {
    CHECK_THROWS_AS(LossBank(0, 1.0, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(LossBank(4, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(LossBank(4, 1.0, -0.1), std::invalid_argument);
    LossBank bank(4, 1.0, 0.9);
    CHECK_THROWS_AS(bank.update(4, 1.0), std::out_of_range);
    CHECK_THROWS_AS(bank.update(0, std::numeric_limits<double>::quiet_NaN()),
                    std::invalid_argument);
    CHECK_THROWS_AS(bank.update(0, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
    CHECK_THROWS_AS(bank.difficulty(std::numeric_limits<double>::quiet_NaN()),
                    std::invalid_argument);
}

TEST_CASE("momentum update: direct evaluation") {
    LossBank bank(2, 1.0, 0.9);
    bank.update(0, 2.0);
    CHECK(bank.value(0) == doctest::Approx(1.1).epsilon(1e-14));
    CHECK(bank.value(1) == 1.0);  // exactly one entry changes
    CHECK(bank.seen(0));
    CHECK_FALSE(bank.seen(1));
}

TEST_CASE("lambda zero degenerates to a last-loss register") {
    LossBank bank(1, 123.0, 0.0);
    bank.update(0, 7.0);
    CHECK(bank.value(0) == 7.0);
    bank.update(0, -2.5);
    CHECK(bank.value(0) == -2.5);
}

TEST_CASE("constant loss stream converges geometrically") {
    const double alpha = std::log(4.0);
    const double lambda = 0.9;
    const double c = 2.5;
    LossBank bank(1, alpha, lambda);
    for (int t = 1; t <= 100; ++t) {
        bank.update(0, c);
        const double expected_gap = std::pow(lambda, t) * std::abs(alpha - c);
        CHECK(std::abs(std::abs(bank.value(0) - c) - expected_gap) < 1e-12);
    }
}

TEST_CASE("difficulty extremes and interior value") {
    LossBank bank(4, 0.0, 0.0);
    const double values[] = {1.0, 2.0, 3.0, 4.0};
    for (std::size_t i = 0; i < 4; ++i) bank.update(i, values[i]);
    CHECK(bank.difficulty(5.0).d == 1.0);
    CHECK(bank.difficulty(0.0).d == 0.0);
    CHECK(bank.difficulty(2.5).d == 0.5);
    // ties count as not-below
    CHECK(bank.difficulty(3.0).d == 0.5);
}

TEST_CASE("difficulty equals the sort-and-count oracle on random banks") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(60);
        LossBank bank(n, 0.0, 0.0);
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            // quantized values so ties actually occur
            values[i] = std::floor(rng.uniform(-4.0, 4.0) * 4.0) / 4.0;
            bank.update(i, values[i]);
        }
        const double query = std::floor(rng.uniform(-4.5, 4.5) * 4.0) / 4.0;
        CHECK(bank.difficulty(query).d == oracle::sorted_rank_fraction(values, query));
    }
}

TEST_CASE("difficulty queries leave the bank unchanged") {
    LossBank bank(8, 1.0, 0.9);
    for (std::size_t i = 0; i < 8; ++i) bank.update(i, 0.25 * static_cast<double>(i));
    const auto before = bank.values();
    (void)bank.difficulty(0.6);
    (void)bank.difficulty(-3.0);
    CHECK(bank.values() == before);
}

TEST_CASE("difficulty is monotone in the query loss") {
    Rng rng(32);
    LossBank bank(256, 0.0, 0.0);
    for (std::size_t i = 0; i < 256; ++i) bank.update(i, rng.uniform(-2.0, 2.0));
    for (int trial = 0; trial < 2000; ++trial) {
        double a = rng.uniform(-3.0, 3.0);
        double b = rng.uniform(-3.0, 3.0);
        if (a > b) std::swap(a, b);
        CHECK(bank.difficulty(a).d <= bank.difficulty(b).d);
    }
}

TEST_CASE("difficulty is invariant under positive rescaling of bank and query") {
    Rng rng(33);
    for (double scale : {0.25, 3.0, 10.0}) {
        LossBank bank(64, 0.0, 0.0);
        LossBank scaled(64, 0.0, 0.0);
        std::vector<double> values(64);
        for (std::size_t i = 0; i < 64; ++i) {
            values[i] = rng.uniform(0.01, 5.0);
            bank.update(i, values[i]);
            scaled.update(i, values[i] * scale);
        }
        for (int q = 0; q < 200; ++q) {
            const double loss = rng.uniform(0.0, 6.0);
            CHECK(bank.difficulty(loss).d == scaled.difficulty(loss * scale).d);
        }
    }
}

TEST_CASE("difficulty of fresh draws is approximately uniform") {
    // One update per slot from an i.i.d. stream (lambda 0 keeps the raw
    // losses); the rank of a fresh draw is then an empirical CDF evaluation.
    Rng rng(34);
    const std::size_t n = 2000;
    LossBank bank(n, 0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) bank.update(i, rng.uniform01());
    std::vector<double> ranks;
    ranks.reserve(4000);
    for (int q = 0; q < 4000; ++q) ranks.push_back(bank.difficulty(rng.uniform01()).d);
    CHECK(oracle::ks_uniform(ranks) < 0.05);
}

TEST_CASE("bank state round-trips through serialization") {
    Rng rng(35);
    LossBank bank(17, std::log(4.0), 0.9);
    for (std::size_t i = 0; i < 17; i += 2) bank.update(i, rng.uniform(-1.0, 3.0));
    const auto bytes = bank.serialize();
    const LossBank restored = LossBank::deserialize(bytes);
    CHECK(restored.size() == bank.size());
    CHECK(restored.lambda() == bank.lambda());
    CHECK(restored.alpha() == bank.alpha());
    CHECK(restored.values() == bank.values());
    for (std::size_t i = 0; i < 17; ++i) CHECK(restored.seen(i) == bank.seen(i));
    CHECK_THROWS_AS(LossBank::deserialize(std::vector<std::uint8_t>(bytes.begin(),
                                                                    bytes.begin() + 8)),
                    std::invalid_argument);
}
