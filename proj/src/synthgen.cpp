#include "sheepweight/synthgen.hpp"

#include "sheepweight/annotation.hpp"
#include "sheepweight/errors.hpp"
#include "sheepweight/file_util.hpp"
#include "sheepweight/png_io.hpp"
#include "sheepweight/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace sheepweight {
namespace {

constexpr double kHay[3] = {0.62, 0.53, 0.34};
constexpr double kStraw[3] = {0.80, 0.72, 0.48};
constexpr double kWool[3] = {0.87, 0.85, 0.79};

std::string sample_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "syn%04zu", index + 1);
    return buf;
}

void paint_background(Tensor& image, SplitMix64& rng, double noise) {
    const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
    std::vector<double> row_gain(h);
    for (std::size_t y = 0; y < h;) {
        const std::size_t band = 1 + static_cast<std::size_t>(rng.below(4));
        const double gain = rng.uniform(0.8, 1.12);
        for (std::size_t k = 0; k < band && y < h; ++k, ++y) row_gain[y] = gain;
    }
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                image[c * plane + y * w + x] = kHay[c] * row_gain[y] + rng.uniform(-noise, noise);
            }
        }
    }
    // Loose straw strands: thin bright horizontal runs.
    const std::size_t strands = (h * w) / 160;
    for (std::size_t s = 0; s < strands; ++s) {
        const std::size_t y = static_cast<std::size_t>(rng.below(h));
        const std::size_t x0 = static_cast<std::size_t>(rng.below(w));
        const std::size_t len = 3 + static_cast<std::size_t>(rng.below(10));
        for (std::size_t x = x0; x < std::min(w, x0 + len); ++x) {
            for (std::size_t c = 0; c < 3; ++c) image[c * plane + y * w + x] = kStraw[c] + rng.uniform(-noise, noise);
        }
    }
}

void paint_sheep(Tensor& image, const SegMask& mask, const Ellipse& e, SplitMix64& rng, double noise) {
    const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            // Darker towards the belly.
            const double shade = 1.0 - 0.08 * std::clamp((static_cast<double>(y) - e.cy) / e.semi_minor, -1.0, 1.0);
            const double wool = rng.uniform(-0.05, 0.05);
            for (std::size_t c = 0; c < 3; ++c) {
                image[c * plane + y * w + x] = kWool[c] * shade + wool + rng.uniform(-noise, noise) * 0.5;
            }
        }
    }
}

}  // namespace

void SynthSpec::validate() const {
    const double frame = static_cast<double>(std::min(image_size.height, image_size.width));
    if (image_size.height < 8 || image_size.width < 8) throw ValidationError("synth: image size must be >= 8");
    if (!(semi_major_min > 0.0 && semi_major_min <= semi_major_max)) {
        throw ValidationError("synth: need 0 < semi_major_min <= semi_major_max");
    }
    if (!(semi_minor_min > 0.0 && semi_minor_min <= semi_minor_max && semi_minor_max <= semi_major_max)) {
        throw ValidationError("synth: need 0 < semi_minor_min <= semi_minor_max <= semi_major_max");
    }
    if (semi_major_max + 1.0 > frame / 2.0) {
        throw ValidationError("synth: semi-axes do not fit inside the frame");
    }
    if (!(max_rotation >= 0.0 && max_rotation <= 3.15)) throw ValidationError("synth: max_rotation out of range");
    if (!(background_noise >= 0.0 && background_noise <= 0.5)) {
        throw ValidationError("synth: background noise must be in [0, 0.5]");
    }
    if (!(weight.noise_std >= 0.0)) throw ValidationError("synth: weight noise_std must be >= 0");
}

SegMask rasterize_ellipse(std::size_t width, std::size_t height, const Ellipse& e) {
    SegMask mask(width, height);
    const double c = std::cos(e.theta), s = std::sin(e.theta);
    const double a2 = e.semi_major * e.semi_major, b2 = e.semi_minor * e.semi_minor;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dx = static_cast<double>(x) - e.cx;
            const double dy = static_cast<double>(y) - e.cy;
            const double u = dx * c + dy * s;
            const double v = -dx * s + dy * c;
            mask.set(x, y, u * u / a2 + v * v / b2 <= 1.0);
        }
    }
    return mask;
}

SynthSample generate_one(const SynthSpec& spec, std::size_t index) {
    spec.validate();
    SplitMix64 rng(derive_seed(spec.seed, index));
    const std::size_t h = spec.image_size.height, w = spec.image_size.width;

    Ellipse e{};
    e.semi_major = rng.uniform(spec.semi_major_min, spec.semi_major_max);
    e.semi_minor = std::min(e.semi_major, rng.uniform(spec.semi_minor_min, spec.semi_minor_max));
    e.theta = rng.uniform(-spec.max_rotation, spec.max_rotation);
    const double c = std::cos(e.theta), s = std::sin(e.theta);
    const double ex = std::sqrt(e.semi_major * e.semi_major * c * c + e.semi_minor * e.semi_minor * s * s);
    const double ey = std::sqrt(e.semi_major * e.semi_major * s * s + e.semi_minor * e.semi_minor * c * c);
    e.cx = rng.uniform(ex + 1.0, static_cast<double>(w) - 2.0 - ex);
    e.cy = rng.uniform(ey + 1.0, static_cast<double>(h) - 2.0 - ey);

    SynthSample sample{Tensor({3, h, w}), rasterize_ellipse(w, h, e), e, {}};
    paint_background(sample.image, rng, spec.background_noise);
    paint_sheep(sample.image, sample.mask, e, rng, spec.background_noise);
    for (double& v : sample.image.values()) v = std::clamp(v, 0.0, 1.0);
    // Quantize so the in-memory image equals what a PNG round trip yields.
    for (double& v : sample.image.values()) v = std::round(v * 255.0) / 255.0;

    const double age = std::round(rng.uniform(3.0, 72.0) * 10.0) / 10.0;
    const bool male = rng.bernoulli(0.5);
    const double noise = spec.weight.noise_std > 0.0 ? spec.weight.noise_std * rng.normal() : 0.0;
    const WeightFormula& f = spec.weight;
    const double weight = f.c_area * static_cast<double>(sample.mask.count()) + f.c_age * age +
                          f.c_gender * (male ? 1.0 : 0.0) + f.c_bias + noise;
    if (!(weight > 0.0)) {
        throw ValidationError("synth: weight formula produced a non-positive weight for sample " +
                              std::to_string(index));
    }
    const std::string id = sample_id(index);
    sample.record = SheepRecord{id, age, male ? Gender::male : Gender::female, weight, id + ".png", id + "_ann.png"};
    return sample;
}

std::vector<SynthSample> generate(const SynthSpec& spec) {
    spec.validate();
    std::vector<SynthSample> out;
    out.reserve(spec.n_samples);
    for (std::size_t i = 0; i < spec.n_samples; ++i) out.push_back(generate_one(spec, i));
    return out;
}

Tensor render_annotation(const SegMask& mask) {
    const std::size_t h = mask.height(), w = mask.width(), plane = h * w;
    Tensor out({3, h, w});
    for (std::size_t i = 0; i < plane; ++i) {
        if (!mask.bits()[i]) continue;
        for (std::size_t c = 0; c < 3; ++c) out[c * plane + i] = kAnnotationOrange[c] / 255.0;
    }
    return out;
}

std::filesystem::path write_dataset(std::span<const SynthSample> samples, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
    std::vector<SheepRecord> records;
    records.reserve(samples.size());
    for (const SynthSample& s : samples) {
        save_image(s.image, dir / s.record.image_path);
        save_image(render_annotation(s.mask), dir / *s.record.annotation_path);
        records.push_back(s.record);
    }
    const auto manifest = dir / kManifestName;
    write_file_atomic(manifest, write_metadata_text(records));
    return manifest;
}

}  // namespace sheepweight
