#include "modify/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace modify {

namespace {

// Target-domain color shifts. Each entry reassigns classes to orbit colors
// (sigma differs from the identity for at least three of four classes) and
// may blend a fraction of the class's own color back in, which yields novel
// in-between hues. The rows are ordered by shift severity, mirroring how
// real target domains differ mildly in style: two channel-structure-
// preserving pair swaps first, then a single-fixed-point 3-cycle, then the
// harsher full derangements. A nearest-centroid color classifier gets at
// most one class (25%) right on any of them.
struct TargetShift {
    std::vector<std::size_t> sigma;  // class -> class whose color is worn
    double blend = 0.0;              // fraction of the own color mixed back in
};

const std::vector<TargetShift>& target_shifts(std::size_t classes) {
    static const std::vector<TargetShift> d2 = {{{1, 0}, 0.0}};
    static const std::vector<TargetShift> d3 = {{{1, 2, 0}, 0.0}, {{2, 0, 1}, 0.0}};
    static const std::vector<TargetShift> d4 = {
        {{2, 3, 0, 1}, 0.0},  {{2, 3, 0, 1}, 0.2}, {{0, 3, 1, 2}, 0.0},
        {{1, 3, 2, 0}, 0.0},  {{1, 0, 3, 2}, 0.0}, {{2, 3, 1, 0}, 0.0},
        {{1, 2, 3, 0}, 0.0},  {{3, 0, 1, 2}, 0.0}, {{3, 2, 1, 0}, 0.0},
        {{1, 3, 0, 2}, 0.0},  {{2, 0, 3, 1}, 0.0}, {{3, 2, 0, 1}, 0.0},
    };
    switch (classes) {
        case 2: return d2;
        case 3: return d3;
        case 4: return d4;
        default:
            throw std::invalid_argument("target_shifts: class count must be 2..4, got " +
                                        std::to_string(classes));
    }
}

std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

Sample make_sample(std::uint32_t id, std::uint16_t label, const DomainSpec& domain,
                   std::size_t image_size, std::uint64_t jitter_seed) {
    const auto& [fg, bg] = domain.palette[label];
    Sample s;
    s.id = id;
    s.label = label;
    s.domain_id = domain.domain_id;
    s.image = render_shape(static_cast<ShapeClass>(label), fg, bg, jitter_seed, image_size);
    return s;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_le(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    return value;
}

}  // namespace

void validate_dataset_config(const DatasetConfig& config) {
    if (config.classes < 2 || config.classes > kMaxClasses)
        throw std::invalid_argument("dataset: class count must be 2..4, got " +
                                    std::to_string(config.classes));
    if (config.n_train == 0 || config.n_train % config.classes != 0)
        throw std::invalid_argument("dataset: n_train " + std::to_string(config.n_train) +
                                    " is not divisible by " + std::to_string(config.classes) +
                                    " classes");
    if (config.n_eval == 0 || config.n_eval % config.classes != 0)
        throw std::invalid_argument("dataset: n_eval " + std::to_string(config.n_eval) +
                                    " is not divisible by " + std::to_string(config.classes) +
                                    " classes");
    if (config.image_size < 8)
        throw std::invalid_argument("dataset: image size must be at least 8");
    const std::size_t max_targets = max_target_domains(config.classes);
    if (config.targets == 0 || config.targets > max_targets)
        throw std::invalid_argument("dataset: target count " + std::to_string(config.targets) +
                                    " outside 1.." + std::to_string(max_targets) + " for " +
                                    std::to_string(config.classes) + " classes");
}

std::vector<std::uint8_t> shape_mask(ShapeClass shape, std::size_t size, const ShapeGeometry& geo) {
    const double unit = static_cast<double>(size) / 16.0;
    const double cx = (static_cast<double>(size) - 1.0) / 2.0 + geo.dx;
    const double cy = (static_cast<double>(size) - 1.0) / 2.0 + geo.dy;
    std::vector<std::uint8_t> mask(size * size, 0);

    auto set_if = [&](auto&& predicate) {
        for (std::size_t r = 0; r < size; ++r)
            for (std::size_t c = 0; c < size; ++c) {
                const double px = static_cast<double>(c) - cx;
                const double py = static_cast<double>(r) - cy;
                if (predicate(px, py)) mask[r * size + c] = 1;
            }
    };

    // Class templates share roughly the same mean pixel count, so the mean
    // image color stays a pure color cue, while the patterns range from
    // compact blobs (square, disk: the confusable pair) to the distinctive
    // triangle and thin cross. Pattern confusability, not size, spreads the
    // per-sample losses.
    switch (shape) {
        case ShapeClass::Square: {
            const double h = 3.2 * unit * geo.scale;
            set_if([&](double px, double py) { return std::abs(px) <= h && std::abs(py) <= h; });
            break;
        }
        case ShapeClass::Disk: {
            const double radius = 3.6 * unit * geo.scale;
            set_if([&](double px, double py) { return px * px + py * py <= radius * radius; });
            break;
        }
        case ShapeClass::Triangle: {
            // Apex up: half-width grows linearly from the apex to the base.
            const double h = 4.2 * unit * geo.scale;
            set_if([&](double px, double py) {
                return py >= -h && py <= h && std::abs(px) <= (py + h) / 2.0;
            });
            break;
        }
        case ShapeClass::Cross: {
            const double h = 5.0 * unit * geo.scale;
            const double t = 1.2 * unit * geo.scale;
            set_if([&](double px, double py) {
                return (std::abs(px) <= t && std::abs(py) <= h) ||
                       (std::abs(py) <= t && std::abs(px) <= h);
            });
            break;
        }
        default:
            throw std::invalid_argument("shape_mask: unknown shape class");
    }
    return mask;
}

Image render_shape_at(ShapeClass shape, const Rgb& fg, const Rgb& bg, std::size_t size,
                      const ShapeGeometry& geo, Rng* noise_rng) {
    const auto mask = shape_mask(shape, size, geo);
    Image img(size, size, 3);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
            const Rgb& color = mask[r * size + c] ? fg : bg;
            for (std::size_t ch = 0; ch < 3; ++ch) img.at(r, c, ch) = color[ch];
        }
    if (noise_rng) {
        for (double& v : img.pixels)
            v = std::clamp(v + noise_rng->uniform(-0.05, 0.05), 0.0, 1.0);
    }
    return img;
}

Image render_shape(ShapeClass shape, const Rgb& fg, const Rgb& bg, std::uint64_t jitter_seed,
                   std::size_t size) {
    Rng rng(jitter_seed);
    const double shift = static_cast<double>(size) / 8.0;
    ShapeGeometry geo;
    geo.dx = rng.uniform(-shift, shift);
    geo.dy = rng.uniform(-shift, shift);
    geo.scale = rng.uniform(0.8, 1.2);
    return render_shape_at(shape, fg, bg, size, geo, &rng);
}

const std::array<Rgb, 6>& palette_colors() {
    // The six channel orderings of one generator color. All entries share the
    // same channel multiset, so grayscale intensity carries no class signal
    // and RGB shuffles permute the set onto itself. The moderate channel
    // spread keeps color trivially separable for a pixel-averaging classifier
    // yet slow enough for the network that shape features stay in play.
    static const std::array<Rgb, 6> colors = [] {
        const Rgb base{0.8, 0.5, 0.2};
        const std::array<std::array<int, 3>, 6> perms = {{
            {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
        std::array<Rgb, 6> out{};
        for (int p = 0; p < 6; ++p)
            for (int c = 0; c < 3; ++c) out[p][c] = base[perms[p][c]];
        return out;
    }();
    return colors;
}

namespace {

// Which orbit color each class owns in the source domain.
constexpr std::array<std::size_t, kMaxClasses> kClassColor = {0, 1, 2, 3};

}  // namespace

DomainSpec source_domain(std::size_t classes) {
    DomainSpec spec;
    spec.domain_id = 0;
    const Rgb black{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < classes; ++k)
        spec.palette.emplace_back(palette_colors()[kClassColor[k]], black);
    return spec;
}

DomainSpec target_domain(std::size_t classes, std::size_t target_index) {
    const auto& tables = target_shifts(classes);
    if (target_index == 0 || target_index > tables.size())
        throw std::invalid_argument("target_domain: index " + std::to_string(target_index) +
                                    " outside 1.." + std::to_string(tables.size()));
    const auto& shift = tables[target_index - 1];
    DomainSpec spec;
    spec.domain_id = static_cast<std::uint16_t>(target_index);
    const Rgb black{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < classes; ++k) {
        const Rgb& own = palette_colors()[kClassColor[k]];
        const Rgb& worn = palette_colors()[kClassColor[shift.sigma[k]]];
        Rgb mixed{};
        for (int c = 0; c < 3; ++c)
            mixed[c] = (1.0 - shift.blend) * worn[c] + shift.blend * own[c];
        spec.palette.emplace_back(mixed, black);
    }
    return spec;
}

std::size_t max_target_domains(std::size_t classes) {
    return target_shifts(classes).size();
}

DatasetSplit generate_dataset(const DatasetConfig& config) {
    validate_dataset_config(config);
    const std::uint64_t dataset_seed = mix_seed(config.seed, stream::dataset);
    const DomainSpec source = source_domain(config.classes);

    DatasetSplit split;
    split.train.reserve(config.n_train);
    for (std::size_t i = 0; i < config.n_train; ++i) {
        const auto label = static_cast<std::uint16_t>(i % config.classes);
        split.train.push_back(make_sample(static_cast<std::uint32_t>(i), label, source,
                                          config.image_size, mix3(dataset_seed, 0, i)));
    }

    EvalDomain source_eval;
    source_eval.name = "source_eval";
    source_eval.domain_id = 0;
    for (std::size_t i = 0; i < config.n_eval; ++i) {
        const auto label = static_cast<std::uint16_t>(i % config.classes);
        source_eval.samples.push_back(make_sample(static_cast<std::uint32_t>(i), label, source,
                                                  config.image_size,
                                                  mix3(dataset_seed, 0, config.n_train + i)));
    }
    split.eval_domains.push_back(std::move(source_eval));

    for (std::size_t t = 1; t <= config.targets; ++t) {
        const DomainSpec domain = target_domain(config.classes, t);
        EvalDomain eval;
        eval.name = "target_" + std::to_string(t);
        eval.domain_id = domain.domain_id;
        for (std::size_t i = 0; i < config.n_eval; ++i) {
            const auto label = static_cast<std::uint16_t>(i % config.classes);
            eval.samples.push_back(make_sample(static_cast<std::uint32_t>(i), label, domain,
                                               config.image_size, mix3(dataset_seed, t, i)));
        }
        split.eval_domains.push_back(std::move(eval));
    }
    return split;
}

void dump_samples(const std::string& path, const std::vector<Sample>& samples,
                  std::uint16_t classes) {
    if (samples.empty()) throw std::invalid_argument("dump_samples: empty sample list");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("dump_samples: cannot open " + path);
    const Image& first = samples.front().image;
    out.write("MDFY", 4);
    write_le<std::uint32_t>(out, 1);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(samples.size()));
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(first.height));
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(first.width));
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(first.channels));
    write_le<std::uint16_t>(out, classes);
    for (const auto& s : samples) {
        if (s.image.height != first.height || s.image.width != first.width ||
            s.image.channels != first.channels)
            throw std::invalid_argument("dump_samples: inconsistent image shapes");
        write_le<std::uint32_t>(out, s.id);
        write_le<std::uint16_t>(out, s.label);
        write_le<std::uint16_t>(out, s.domain_id);
        for (double v : s.image.pixels) write_le<float>(out, static_cast<float>(v));
    }
    if (!out) throw std::runtime_error("dump_samples: write failed for " + path);
}

LoadedSamples load_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_samples: cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MDFY", 4) != 0)
        throw std::runtime_error("load_samples: bad magic in " + path);
    const auto version = read_le<std::uint32_t>(in);
    if (version != 1)
        throw std::runtime_error("load_samples: unsupported version " + std::to_string(version));
    const auto count = read_le<std::uint32_t>(in);
    const auto height = read_le<std::uint16_t>(in);
    const auto width = read_le<std::uint16_t>(in);
    const auto channels = read_le<std::uint16_t>(in);
    LoadedSamples loaded;
    loaded.classes = read_le<std::uint16_t>(in);
    loaded.samples.reserve(count);
    const std::size_t n_pixels = std::size_t(height) * width * channels;
    for (std::uint32_t i = 0; i < count; ++i) {
        Sample s;
        s.id = read_le<std::uint32_t>(in);
        s.label = read_le<std::uint16_t>(in);
        s.domain_id = read_le<std::uint16_t>(in);
        s.image = Image(height, width, channels);
        for (std::size_t p = 0; p < n_pixels; ++p)
            s.image.pixels[p] = static_cast<double>(read_le<float>(in));
        if (!in) throw std::runtime_error("load_samples: truncated file " + path);
        loaded.samples.push_back(std::move(s));
    }
    return loaded;
}

}  // namespace modify
