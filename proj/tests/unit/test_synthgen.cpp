#include "sheepweight/annotation.hpp"
#include "sheepweight/errors.hpp"
#include "sheepweight/features.hpp"
#include "sheepweight/metadata.hpp"
#include "sheepweight/metrics.hpp"
#include "sheepweight/png_io.hpp"
#include "sheepweight/synthgen.hpp"

#include "unit/test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sheepweight;
using sheepweight::testing::TempDir;

namespace {

SynthSpec small_spec(std::size_t n, std::uint64_t seed = 7) {
    SynthSpec s;
    s.n_samples = n;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(Synthgen, Deterministic) {
    const auto a = generate(small_spec(8));
    const auto b = generate(small_spec(8));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].image, b[i].image);
        EXPECT_EQ(a[i].mask, b[i].mask);
        EXPECT_EQ(a[i].record, b[i].record);
    }
    EXPECT_NE(generate(small_spec(1, 8))[0].image, a[0].image);
}

TEST(Synthgen, SampleDependsOnlyOnIndex) {
    const auto all = generate(small_spec(6));
    for (std::size_t i = 0; i < all.size(); ++i) {
        const SynthSample one = generate_one(small_spec(100), i);
        EXPECT_EQ(one.image, all[i].image);
        EXPECT_EQ(one.record, all[i].record);
    }
}

TEST(Synthgen, MaskIsRasterizerOutputAndImageIsQuantized) {
    for (const auto& s : generate(small_spec(10))) {
        EXPECT_EQ(s.mask, rasterize_ellipse(64, 64, s.ellipse));
        EXPECT_EQ(s.image.shape(), (Shape{3, 64, 64}));
        for (double v : s.image.values()) {
            EXPECT_EQ(v, std::round(v * 255.0) / 255.0);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Synthgen, NoiselessWeightIsAffineInArea) {
    SynthSpec spec = small_spec(25);
    spec.weight.noise_std = 0.0;
    spec.weight.c_age = 0.0;
    spec.weight.c_gender = 0.0;
    for (const auto& s : generate(spec)) {
        const double expected = spec.weight.c_area * double(s.mask.count()) + spec.weight.c_bias;
        EXPECT_NEAR(*s.record.weight_kg, expected, 1e-9);
    }
}

TEST(Synthgen, NoiselessLinearTargetIsExactlyRepresentable) {
    SynthSpec spec = small_spec(40);
    spec.weight.noise_std = 0.0;
    const auto samples = generate(spec);
    std::vector<double> y, f;
    for (const auto& s : samples) {
        y.push_back(*s.record.weight_kg);
        f.push_back(spec.weight.c_area * pixel_area(s.mask) + spec.weight.c_age * s.record.age_months +
                    spec.weight.c_gender * gender_feature(s.record.gender) + spec.weight.c_bias);
    }
    EXPECT_NEAR(r2_score(y, f), 1.0, 1e-9);
}

TEST(Synthgen, EllipseAreaOracle) {
    for (double a = 8; a <= 26; a += 2) {
        for (double b = 8; b <= a; b += 3) {
            const SegMask m = rasterize_ellipse(80, 80, {40, 40, a, b, 0});
            const double analytic = std::numbers::pi * a * b;
            EXPECT_LT(std::abs(double(m.count()) - analytic) / analytic, 0.03) << a << "x" << b;
            EXPECT_EQ(pixel_area(m), double(m.count()));
        }
    }
    SplitMix64 rng(1);
    for (int i = 0; i < 30; ++i) {
        const Ellipse e{rng.uniform(30, 34), rng.uniform(30, 34), rng.uniform(8, 20), rng.uniform(8, 12),
                        rng.uniform(-1.5, 1.5)};
        const SegMask m = rasterize_ellipse(64, 64, e);
        const double analytic = std::numbers::pi * e.semi_major * e.semi_minor;
        EXPECT_LT(std::abs(double(m.count()) - analytic) / analytic, 0.03);
    }
}

TEST(Synthgen, WriteThenParseIsLossless) {
    TempDir dir("syn");
    const auto samples = generate(small_spec(12));
    const auto manifest = write_dataset(samples, dir.path());
    const auto records = parse_metadata(manifest);
    ASSERT_EQ(records.size(), samples.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SheepRecord& r = records[i];
        const SheepRecord& s = samples[i].record;
        EXPECT_EQ(r.id, s.id);
        EXPECT_EQ(r.age_months, s.age_months);
        EXPECT_EQ(r.gender, s.gender);
        EXPECT_EQ(r.weight_kg, s.weight_kg);
        EXPECT_EQ(load_image(r.image_path), samples[i].image);
        ASSERT_TRUE(r.annotation_path);
        EXPECT_EQ(annotation_to_segmask(load_image(*r.annotation_path)), samples[i].mask);
    }
}

TEST(Synthgen, EmptyDatasetIsValid) {
    TempDir dir("syn");
    const auto manifest = write_dataset(std::vector<SynthSample>{}, dir.path());
    EXPECT_TRUE(parse_metadata(manifest).empty());
}

TEST(Synthgen, SpecValidation) {
    SynthSpec s;
    s.semi_major_min = 30;
    s.semi_major_max = 20;
    EXPECT_THROW(s.validate(), ValidationError);
    SynthSpec t;
    t.image_size = {8, 8};
    EXPECT_THROW(t.validate(), ValidationError);
    SynthSpec u;
    u.weight.noise_std = -1;
    EXPECT_THROW(u.validate(), ValidationError);
}
