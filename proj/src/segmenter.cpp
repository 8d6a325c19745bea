#include "sheepweight/segmenter.hpp"

#include "sheepweight/errors.hpp"
#include "sheepweight/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sheepweight {
namespace {

constexpr std::size_t kKernel = 3;

void require_image(const Tensor& image, ImageSize size, const std::string& what) {
    if (image.shape() != Shape{3, size.height, size.width}) {
        throw DimensionError(what + ": expected image shape " + shape_to_string({3, size.height, size.width}) +
                             ", got " + shape_to_string(image.shape()));
    }
}

Tensor stack_batch(std::span<const SegSample> samples, std::span<const std::size_t> order, bool masks) {
    const Tensor& first = masks ? samples[order[0]].mask : samples[order[0]].image;
    Shape shape{order.size()};
    shape.insert(shape.end(), first.shape().begin(), first.shape().end());
    Tensor out(shape);
    const std::size_t stride = first.size();
    for (std::size_t b = 0; b < order.size(); ++b) {
        const Tensor& src = masks ? samples[order[b]].mask : samples[order[b]].image;
        std::copy(src.data(), src.data() + stride, out.data() + b * stride);
    }
    return out;
}

}  // namespace

Conv2dLayer& SegModel::head() {
    return std::get<Conv2dLayer>(network.layers.at(network.layers.size() - 2));
}

const Conv2dLayer& SegModel::head() const {
    return std::get<Conv2dLayer>(network.layers.at(network.layers.size() - 2));
}

void SegTrainConfig::validate() const {
    if (epochs == 0) throw ValidationError("segmenter epochs must be >= 1");
    if (batch_size == 0) throw ValidationError("segmenter batch size must be >= 1");
    adam.validate();
}

SegModel build_seg_model(ImageSize input_size, std::uint64_t seed) {
    if (input_size.height < 16 || input_size.width < 16 || input_size.height % 8 != 0 ||
        input_size.width % 8 != 0) {
        throw ValidationError("segmenter input size " + std::to_string(input_size.height) + "x" +
                              std::to_string(input_size.width) +
                              " must be >= 16 and divisible by 8; resize the images");
    }
    SplitMix64 rng(seed);
    SegModel model{{}, input_size};
    auto& layers = model.network.layers;
    std::size_t channels = 3;
    for (std::size_t width : kSegEncoderWidths) {
        layers.emplace_back(make_conv2d(channels, width, kKernel, rng));
        layers.emplace_back(ActivationLayer{Activation::relu});
        layers.emplace_back(MaxPool2x2Layer{});
        channels = width;
    }
    const std::size_t decoder_widths[] = {16, 8, 1};
    for (std::size_t i = 0; i < 3; ++i) {
        layers.emplace_back(Upsample2xLayer{});
        layers.emplace_back(make_conv2d(channels, decoder_widths[i], kKernel, rng));
        layers.emplace_back(ActivationLayer{i == 2 ? Activation::sigmoid : Activation::relu});
        channels = decoder_widths[i];
    }
    return model;
}

std::size_t seg_param_count() {
    const std::size_t channels[] = {3, 8, 16, 32, 16, 8, 1};
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < std::size(channels); ++i) {
        total += channels[i + 1] * channels[i] * kKernel * kKernel + channels[i + 1];
    }
    return total;
}

TrainHistory train_seg(SegModel& model, std::span<const SegSample> samples, const SegTrainConfig& config) {
    config.validate();
    if (samples.empty()) throw ValidationError("train_seg: empty training set");
    const ImageSize size = model.input_size;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string what = "train_seg sample " + std::to_string(i);
        require_image(samples[i].image, size, what);
        if (samples[i].mask.shape() != Shape{1, size.height, size.width}) {
            throw DimensionError(what + ": expected mask shape " +
                                 shape_to_string({1, size.height, size.width}) + ", got " +
                                 shape_to_string(samples[i].mask.shape()));
        }
    }

    SplitMix64 rng(config.seed);
    AdamState adam(config.adam);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    TrainHistory history;
    Network::Trace trace;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            const Tensor images = stack_batch(samples, batch, false);
            Tensor targets = stack_batch(samples, batch, true);
            const Tensor probs = model.network.forward(images, trace);
            targets = targets.reshaped(probs.shape());
            const LossWithGrad loss = bce(targets, probs);
            const Network::Gradients grads = model.network.backward(trace, loss.grad);
            const auto params = model.network.parameters();
            const auto grad_views = Network::flatten(grads);
            adam_step(params, grad_views, adam);
            weighted += loss.loss.value * static_cast<double>(batch.size());
        }
        const double epoch_loss = weighted / static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss)) {
            throw NonFiniteError("train_seg: non-finite loss at epoch " + std::to_string(epoch));
        }
        history.epoch_loss.push_back(epoch_loss);
    }
    return history;
}

Tensor seg_probabilities(const SegModel& model, const Tensor& image) {
    require_image(image, model.input_size, "segment");
    return model.network.forward(image.reshaped({1, 3, model.input_size.height, model.input_size.width}));
}

SegMask segment(const SegModel& model, const Tensor& image) {
    return SegMask::from_tensor(seg_probabilities(model, image), 0.5);
}

SegMask segment_any_size(const SegModel& model, const Tensor& image) {
    require_rank(image, 3, "segment");
    if (image.dim(0) != 3) {
        throw DimensionError("segment: expected 3 channels, got shape " + shape_to_string(image.shape()));
    }
    const std::size_t h = image.dim(1), w = image.dim(2);
    const ImageSize size = model.input_size;
    if (h == size.height && w == size.width) return segment(model, image);
    const SegMask small = segment(model, resize_bilinear(image, size.height, size.width));
    return small.resized_nearest(w, h);
}

Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width) {
    require_rank(image, 3, "resize_bilinear");
    const std::size_t ch = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (h == 0 || w == 0 || height == 0 || width == 0) throw DimensionError("resize_bilinear: empty image");
    if (h == height && w == width) return image;
    Tensor out({ch, height, width});
    const double sy = static_cast<double>(h) / static_cast<double>(height);
    const double sx = static_cast<double>(w) / static_cast<double>(width);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, h - 1);
        const double ty = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double fx =
                std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const double tx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < ch; ++c) {
                const double* p = image.data() + c * h * w;
                const double top = p[y0 * w + x0] * (1.0 - tx) + p[y0 * w + x1] * tx;
                const double bottom = p[y1 * w + x0] * (1.0 - tx) + p[y1 * w + x1] * tx;
                out[(c * height + y) * width + x] = top * (1.0 - ty) + bottom * ty;
            }
        }
    }
    return out;
}

}  // namespace sheepweight
