#include "sheepweight/dataset.hpp"
#include "sheepweight/errors.hpp"
#include "sheepweight/metrics.hpp"
#include "sheepweight/segmenter.hpp"
#include "sheepweight/synthgen.hpp"

#include "unit/test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sheepweight;
using sheepweight::testing::random_tensor;

namespace {

std::vector<SegSample> scenes(std::size_t n, std::uint64_t seed) {
    SynthSpec spec;
    spec.n_samples = n;
    spec.seed = seed;
    std::vector<SegSample> out;
    for (const auto& s : generate(spec)) out.push_back(to_seg_sample(s));
    return out;
}

std::vector<double> flat_params(SegModel& m) {
    std::vector<double> out;
    for (const ParamView& p : m.network.parameters()) out.insert(out.end(), p.values.begin(), p.values.end());
    return out;
}

}  // namespace

TEST(Segmenter, BuildIsDeterministic) {
    SegModel a = build_seg_model({64, 64}, 7);
    SegModel b = build_seg_model({64, 64}, 7);
    EXPECT_EQ(flat_params(a), flat_params(b));
    SegModel c = build_seg_model({64, 64}, 8);
    EXPECT_NE(flat_params(a), flat_params(c));
}

TEST(Segmenter, ParameterCountClosedForm) {
    const std::size_t widths[][2] = {{3, 8}, {8, 16}, {16, 32}, {32, 16}, {16, 8}, {8, 1}};
    std::size_t expected = 0;
    for (const auto& w : widths) expected += w[1] * w[0] * 9 + w[1];
    EXPECT_EQ(expected, 11889u);
    EXPECT_EQ(seg_param_count(), expected);
    EXPECT_EQ(build_seg_model({64, 64}, 1).network.param_count(), expected);
}

TEST(Segmenter, OutputShapeAndRange) {
    const SegModel m = build_seg_model({64, 64}, 7);
    SplitMix64 rng(1);
    const Tensor p = seg_probabilities(m, random_tensor({3, 64, 64}, rng, 0, 1));
    EXPECT_EQ(p.shape(), (Shape{1, 1, 64, 64}));
    for (double v : p.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Segmenter, InvalidInputSizesRejected) {
    EXPECT_THROW(build_seg_model({60, 64}, 1), ValidationError);
    EXPECT_THROW(build_seg_model({8, 8}, 1), ValidationError);
    const SegModel m = build_seg_model({32, 32}, 1);
    EXPECT_THROW(segment(m, Tensor::zeros({3, 64, 64})), DimensionError);
}

TEST(Segmenter, ForcedHeadBiasProbes) {
    SegModel m = build_seg_model({32, 32}, 2);
    SplitMix64 rng(2);
    const Tensor img = random_tensor({3, 32, 32}, rng, 0, 1);
    m.head().bias[0] = -1e3;
    EXPECT_EQ(segment(m, img).count(), 0u);
    m.head().bias[0] = 1e3;
    EXPECT_EQ(segment(m, img).count(), 32u * 32u);
}

TEST(Segmenter, ProbabilityExactlyHalfIsBackground) {
    SegModel m = build_seg_model({32, 32}, 3);
    for (double& w : m.head().kernels.values()) w = 0.0;
    m.head().bias[0] = 0.0;
    SplitMix64 rng(3);
    const Tensor img = random_tensor({3, 32, 32}, rng, 0, 1);
    const Tensor probs = seg_probabilities(m, img);
    for (double v : probs.values()) ASSERT_EQ(v, 0.5);
    EXPECT_EQ(segment(m, img).count(), 0u);
    m.head().bias[0] = 1e-12;
    EXPECT_EQ(segment(m, img).count(), 32u * 32u);
}

TEST(Segmenter, AnySizeSegmentationKeepsDimensions) {
    const SegModel m = build_seg_model({32, 32}, 4);
    SplitMix64 rng(4);
    for (auto [h, w] : {std::pair{32, 32}, {45, 70}, {17, 23}, {128, 96}}) {
        const SegMask mask = segment_any_size(m, random_tensor({3, std::size_t(h), std::size_t(w)}, rng, 0, 1));
        EXPECT_EQ(mask.height(), std::size_t(h));
        EXPECT_EQ(mask.width(), std::size_t(w));
    }
}

TEST(Segmenter, EmptyTrainingSetRejected) {
    SegModel m = build_seg_model({64, 64}, 1);
    EXPECT_THROW(train_seg(m, std::vector<SegSample>{}, SegTrainConfig{}), ValidationError);
}

TEST(Segmenter, BadSampleShapeNamesIndex) {
    SegModel m = build_seg_model({64, 64}, 1);
    auto s = scenes(3, 1);
    s[2].mask = Tensor::zeros({1, 32, 32});
    try {
        train_seg(m, s, SegTrainConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("sample 2"), std::string::npos) << e.what();
    }
}

TEST(Segmenter, TrainingIsDeterministicAndFinite) {
    const auto s = scenes(5, 9);
    SegTrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    SegModel a = build_seg_model({64, 64}, 5);
    SegModel b = build_seg_model({64, 64}, 5);
    const auto ha = train_seg(a, s, cfg);
    const auto hb = train_seg(b, s, cfg);
    EXPECT_EQ(ha.epoch_loss, hb.epoch_loss);
    EXPECT_EQ(flat_params(a), flat_params(b));
    for (double l : ha.epoch_loss) EXPECT_TRUE(std::isfinite(l));
    EXPECT_EQ(segment(a, s[0].image), segment(b, s[0].image));
}

TEST(Segmenter, MemorizesOneSample) {
    const auto s = scenes(1, 13);
    SegModel m = build_seg_model({64, 64}, 13);
    SegTrainConfig cfg;
    cfg.epochs = 300;
    cfg.batch_size = 1;
    cfg.adam.lr = 3e-3;
    train_seg(m, s, cfg);
    EXPECT_GT(iou(segment(m, s[0].image), SegMask::from_tensor(s[0].mask)), 0.95);
}

TEST(Segmenter, ThirtyScenesReachLowTrainingLoss) {
    const auto s = scenes(30, 7);
    SegModel m = build_seg_model({64, 64}, 7);
    const auto h = train_seg(m, s, SegTrainConfig{});
    ASSERT_EQ(h.epoch_loss.size(), 150u);
    EXPECT_LT(h.epoch_loss.back(), 0.1);
    EXPECT_LT(h.epoch_loss.back(), h.epoch_loss.front());
}

TEST(ResizeBilinear, IdentityAndConstant) {
    SplitMix64 rng(6);
    const Tensor img = random_tensor({3, 10, 12}, rng, 0, 1);
    EXPECT_EQ(resize_bilinear(img, 10, 12), img);
    const Tensor c = resize_bilinear(Tensor::full({3, 9, 7}, 0.25), 20, 31);
    for (double v : c.values()) EXPECT_NEAR(v, 0.25, 1e-15);
}
