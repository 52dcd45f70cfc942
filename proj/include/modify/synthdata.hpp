#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "modify/image.hpp"
#include "modify/rng.hpp"

namespace modify {

using Rgb = std::array<double, 3>;

enum class ShapeClass : std::uint16_t { Square = 0, Disk = 1, Triangle = 2, Cross = 3 };

inline constexpr std::size_t kMaxClasses = 4;

// Per-class foreground/background colors for one domain. The source domain
// assigns each class a distinct foreground color, so color alone predicts the
// class there; target domains reassign the same colors to different classes
// (derangements), which breaks any classifier that leans on color.
struct DomainSpec {
    std::uint16_t domain_id = 0;
    std::vector<std::pair<Rgb, Rgb>> palette;  // class -> (fg, bg)
};

struct Sample {
    std::uint32_t id = 0;
    Image image;
    std::uint16_t label = 0;
    std::uint16_t domain_id = 0;
};

struct EvalDomain {
    std::string name;
    std::uint16_t domain_id = 0;
    std::vector<Sample> samples;
};

// Train split (source domain only) plus one eval list per domain:
// a held-out source slice first, then each target domain.
struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<EvalDomain> eval_domains;
};

struct DatasetConfig {
    std::size_t n_train = 2000;
    std::size_t n_eval = 500;
    std::size_t targets = 3;
    std::size_t image_size = 16;
    std::size_t classes = 4;
    std::uint64_t seed = 1;
};

// Position/scale of a rendered shape, before pixel noise.
struct ShapeGeometry {
    double dx = 0.0;
    double dy = 0.0;
    double scale = 1.0;
};

// Foreground mask of a shape on a size x size grid, one byte per pixel.
// Geometry translates the center and scales the shape; at identity geometry
// and size 16 the square covers exactly an 8x8 block.
std::vector<std::uint8_t> shape_mask(ShapeClass shape, std::size_t size, const ShapeGeometry& geo);

// Deterministic render at explicit geometry; when noise_rng is non-null,
// adds per-pixel noise ~ U(-0.05, 0.05) clamped to [0, 1].
Image render_shape_at(ShapeClass shape, const Rgb& fg, const Rgb& bg, std::size_t size,
                      const ShapeGeometry& geo, Rng* noise_rng);

// Render with jittered geometry (translation up to size/8 pixels each way,
// scale in [0.8, 1.2]) and pixel noise, all drawn from jitter_seed.
Image render_shape(ShapeClass shape, const Rgb& fg, const Rgb& bg, std::uint64_t jitter_seed,
                   std::size_t size = 16);

// The six colors reachable from (1, 0.5, 0) by channel permutation. Every
// palette draws from this set: all entries share the same channel mean, so a
// grayscale view carries no class information, and channel shuffles map the
// set onto itself.
const std::array<Rgb, 6>& palette_colors();

DomainSpec source_domain(std::size_t classes);
// target_index counts from 1; each target is a distinct derangement of the
// source color assignment.
DomainSpec target_domain(std::size_t classes, std::size_t target_index);
// How many distinct target domains exist for a class count.
std::size_t max_target_domains(std::size_t classes);

// Throws on invalid dataset settings (counts not divisible by the class
// count, unsupported class/target counts, image too small).
void validate_dataset_config(const DatasetConfig& config);

// Deterministic dataset build: class-balanced train and eval sets, source
// palette for train plus held-out eval, one deranged palette per target.
// Throws if n_train or n_eval is not divisible by the class count.
DatasetSplit generate_dataset(const DatasetConfig& config);

// Flat binary dataset file. Little-endian layout:
//   magic "MDFY", version u32, N u32, H u16, W u16, C_channels u16,
//   C_classes u16, then per sample: id u32, label u16, domain u16,
//   pixels f32[H*W*C_channels].
void dump_samples(const std::string& path, const std::vector<Sample>& samples,
                  std::uint16_t classes);
struct LoadedSamples {
    std::vector<Sample> samples;
    std::uint16_t classes = 0;
};
LoadedSamples load_samples(const std::string& path);

}  // namespace modify
