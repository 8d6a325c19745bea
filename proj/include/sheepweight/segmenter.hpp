#pragma once

#include "sheepweight/network.hpp"
#include "sheepweight/optimizer.hpp"
#include "sheepweight/seg_mask.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sheepweight {

struct ImageSize {
    std::size_t height = 64;
    std::size_t width = 64;

    friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Encoder: three (conv3x3 + relu + maxpool) blocks, 3->8->16->32 channels.
/// Decoder: three (upsample + conv3x3) blocks, 32->16->8->1, relu after the
/// first two and a sigmoid head after the last.
struct SegModel {
    Network network;
    ImageSize input_size;

    /// Final convolution, whose bias sets the decision offset.
    Conv2dLayer& head();
    const Conv2dLayer& head() const;
};

inline constexpr std::size_t kSegEncoderWidths[] = {8, 16, 32};

struct SegTrainConfig {
    std::size_t epochs = 150;
    std::size_t batch_size = 8;
    AdamConfig adam{};
    std::uint64_t seed = 7;

    void validate() const;
};

/// One training pair: image (3,h,w) in [0,1] and target mask (1,h,w) in {0,1}.
struct SegSample {
    Tensor image;
    Tensor mask;
};

struct TrainHistory {
    std::vector<double> epoch_loss;
};

SegModel build_seg_model(ImageSize input_size, std::uint64_t seed);

/// Closed-form parameter count of the fixed conv stack.
std::size_t seg_param_count();

TrainHistory train_seg(SegModel& model, std::span<const SegSample> samples, const SegTrainConfig& config);

/// Per-pixel foreground probability, shape (1,1,h,w).
Tensor seg_probabilities(const SegModel& model, const Tensor& image);

/// Mask at the model's input size: foreground iff probability > 0.5.
SegMask segment(const SegModel& model, const Tensor& image);

/// Any-size image: bilinear resize to the model input, segment, then
/// nearest-neighbour resize of the mask back to the original dimensions.
SegMask segment_any_size(const SegModel& model, const Tensor& image);

/// Bilinear resample of a (c,h,w) tensor (half-pixel centres, edge clamp).
Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width);

}  // namespace sheepweight
