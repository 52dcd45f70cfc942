#include "modify/augment.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace modify {

const std::array<ChannelPermutation, 6>& all_channel_permutations() {
    static const std::array<ChannelPermutation, 6> perms = {{
        {{0, 1, 2}},
        {{0, 2, 1}},
        {{1, 0, 2}},
        {{1, 2, 0}},
        {{2, 0, 1}},
        {{2, 1, 0}},
    }};
    return perms;
}

Image rgb_shuffle(const Image& image, const ChannelPermutation& perm) {
    if (image.channels != 3)
        throw std::invalid_argument("rgb_shuffle: image has " +
                                    std::to_string(image.channels) +
                                    " channels, expected 3");
    Image out = image;
    const std::size_t n = image.height * image.width;
    for (std::size_t p = 0; p < n; ++p) {
        const double* src = image.pixels.data() + p * 3;
        double* dst = out.pixels.data() + p * 3;
        for (int c = 0; c < 3; ++c) dst[c] = src[perm.perm[c]];
    }
    return out;
}

std::pair<Image, AugmentationDecision> maybe_augment(const Image& image, double degree, Rng& rng) {
    if (!(degree >= 0.0 && degree <= 1.0))
        throw std::invalid_argument("maybe_augment: degree " + std::to_string(degree) +
                                    " outside [0, 1]");
    AugmentationDecision decision;
    decision.degree = degree;
    const double u = rng.uniform01();
    if (u < degree) {
        decision.applied = true;
        // Index 0 is the identity; draw from the remaining five.
        decision.permutation = all_channel_permutations()[1 + rng.uniform_index(5)];
        return {rgb_shuffle(image, decision.permutation), decision};
    }
    return {image, decision};
}

Image jitter(const Image& image, double amplitude, Rng& rng) {
    if (!(amplitude >= 0.0 && amplitude <= 1.0))
        throw std::invalid_argument("jitter: amplitude " + std::to_string(amplitude) +
                                    " outside [0, 1]");
    if (amplitude == 0.0) return image;
    const double brightness = rng.uniform(-0.4 * amplitude, 0.4 * amplitude);
    const double contrast = 1.0 + rng.uniform(-0.7 * amplitude, 0.7 * amplitude);
    Image out = image;
    for (double& v : out.pixels) {
        v = (v - 0.5) * contrast + 0.5 + brightness;
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

}  // namespace modify
