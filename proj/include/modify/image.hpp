#pragma once

#include <cstddef>
#include <vector>

namespace modify {

// Small interleaved raster, values in [0, 1]. Channel count is carried
// explicitly; everything in this project uses 3 (RGB) but the field keeps
// channel-dependent operations checkable.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 3;
    std::vector<double> pixels;  // row-major, channel-interleaved

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c = 3, double fill = 0.0)
        : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

    double& at(std::size_t r, std::size_t c, std::size_t ch) {
        return pixels[(r * width + c) * channels + ch];
    }
    double at(std::size_t r, std::size_t c, std::size_t ch) const {
        return pixels[(r * width + c) * channels + ch];
    }

    bool operator==(const Image& other) const = default;
};

}  // namespace modify
