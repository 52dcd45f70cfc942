#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "modify/image.hpp"
#include "modify/rng.hpp"

namespace modify {

// Bijection on the three color channels. Output channel c takes input
// channel perm[c].
struct ChannelPermutation {
    std::array<std::uint8_t, 3> perm{0, 1, 2};

    static ChannelPermutation identity() { return {}; }
    bool is_identity() const { return perm == std::array<std::uint8_t, 3>{0, 1, 2}; }

    // Composition: applying `first` then `second` equals applying
    // first.then(second) once.
    ChannelPermutation then(const ChannelPermutation& second) const {
        ChannelPermutation out;
        for (int c = 0; c < 3; ++c) out.perm[c] = perm[second.perm[c]];
        return out;
    }

    bool operator==(const ChannelPermutation& other) const = default;
};

// The six channel permutations in a fixed order; index 0 is the identity.
const std::array<ChannelPermutation, 6>& all_channel_permutations();

// Record of one augmentation draw. `degree` is the probability that was used;
// when not applied the permutation is the identity.
struct AugmentationDecision {
    bool applied = false;
    ChannelPermutation permutation;
    double degree = 0.0;
};

// Reorders color channels, leaving spatial layout untouched. Throws unless
// the image has exactly 3 channels.
Image rgb_shuffle(const Image& image, const ChannelPermutation& perm);

// With probability `degree`, applies rgb_shuffle with a permutation drawn
// uniformly from the five non-identity permutations; otherwise returns the
// image unchanged. Throws if degree is outside [0, 1].
std::pair<Image, AugmentationDecision> maybe_augment(const Image& image, double degree, Rng& rng);

// Brightness/contrast jitter with strength scaled by `amplitude` in [0, 1].
// Used by the extended augmentation mode; amplitude 1 is the strong-DA
// setting, amplitude 0 returns the image unchanged without consuming draws.
Image jitter(const Image& image, double amplitude, Rng& rng);

}  // namespace modify
