#pragma once

// Synthetic stand-in for photographed sheep: an off-white textured ellipse on
// a streaked hay-coloured background, with the exact rasterized mask and a
// weight drawn from a known linear formula.

#include "sheepweight/metadata.hpp"
#include "sheepweight/seg_mask.hpp"
#include "sheepweight/segmenter.hpp"
#include "sheepweight/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sheepweight {

struct WeightFormula {
    double c_area = 0.01;
    double c_age = 0.2;
    double c_gender = 4.0;
    double c_bias = 10.0;
    double noise_std = 1.0;
};

struct SynthSpec {
    std::size_t n_samples = 200;
    ImageSize image_size{64, 64};
    double semi_major_min = 12.0;
    double semi_major_max = 24.0;
    double semi_minor_min = 8.0;
    double semi_minor_max = 14.0;
    double max_rotation = 0.35;  // radians, either direction
    double background_noise = 0.06;
    WeightFormula weight{};
    std::uint64_t seed = 7;

    void validate() const;
};

struct Ellipse {
    double cx;
    double cy;
    double semi_major;  // along the rotated x axis
    double semi_minor;
    double theta;
};

/// Pixel (x, y) is inside iff its centre (x, y) satisfies the ellipse inequality.
SegMask rasterize_ellipse(std::size_t width, std::size_t height, const Ellipse& e);

struct SynthSample {
    Tensor image;  // (3,h,w)
    SegMask mask;
    Ellipse ellipse;
    SheepRecord record;
};

/// Sample `index` of the dataset; depends only on (spec, index).
SynthSample generate_one(const SynthSpec& spec, std::size_t index);
std::vector<SynthSample> generate(const SynthSpec& spec);

/// Orange-on-black rendering of a mask, (3,h,w).
Tensor render_annotation(const SegMask& mask);

/// Writes <id>.png, <id>_ann.png and metadata.txt into `dir` (created if
/// needed). Returns the manifest path.
std::filesystem::path write_dataset(std::span<const SynthSample> samples, const std::filesystem::path& dir);

}  // namespace sheepweight
