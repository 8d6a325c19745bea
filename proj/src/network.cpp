#include "sheepweight/network.hpp"

#include "sheepweight/errors.hpp"

#include <cmath>

namespace sheepweight {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

LayerKind layer_kind(const Layer& layer) noexcept {
    return std::visit(overloaded{
                          [](const DenseLayer&) { return LayerKind::dense; },
                          [](const Conv2dLayer&) { return LayerKind::conv2d; },
                          [](const ActivationLayer&) { return LayerKind::activation; },
                          [](const MaxPool2x2Layer&) { return LayerKind::maxpool2x2; },
                          [](const Upsample2xLayer&) { return LayerKind::upsample2x; },
                      },
                      layer);
}

std::string_view layer_kind_name(LayerKind kind) noexcept {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::activation: return "activation";
        case LayerKind::maxpool2x2: return "maxpool2x2";
        case LayerKind::upsample2x: return "upsample2x";
    }
    return "unknown";
}

Tensor Network::forward(const Tensor& input) const {
    Tensor x = input;
    for (const Layer& layer : layers) {
        x = std::visit(overloaded{
                           [&](const DenseLayer& l) { return dense_forward(x, l); },
                           [&](const Conv2dLayer& l) { return conv2d_forward(x, l); },
                           [&](const ActivationLayer& l) { return apply_activation(std::move(x), l.kind); },
                           [&](const MaxPool2x2Layer&) { return maxpool2x2(x).output; },
                           [&](const Upsample2xLayer&) { return upsample2x_nearest(x); },
                       },
                       layer);
    }
    return x;
}

Tensor Network::forward(const Tensor& input, Trace& trace) const {
    trace.activations.clear();
    trace.argmax.assign(layers.size(), {});
    trace.activations.reserve(layers.size() + 1);
    trace.activations.push_back(input);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Tensor& x = trace.activations.back();
        Tensor y = std::visit(overloaded{
                                  [&](const DenseLayer& l) { return dense_forward(x, l); },
                                  [&](const Conv2dLayer& l) { return conv2d_forward(x, l); },
                                  [&](const ActivationLayer& l) { return apply_activation(x, l.kind); },
                                  [&](const MaxPool2x2Layer&) {
                                      PoolResult r = maxpool2x2(x);
                                      trace.argmax[i] = std::move(r.argmax);
                                      return std::move(r.output);
                                  },
                                  [&](const Upsample2xLayer&) { return upsample2x_nearest(x); },
                              },
                              layers[i]);
        trace.activations.push_back(std::move(y));
    }
    return trace.activations.back();
}

Network::Gradients Network::backward(const Trace& trace, const Tensor& output_grad) const {
    if (trace.activations.size() != layers.size() + 1) {
        throw DimensionError("backward: trace does not belong to this network");
    }
    if (output_grad.shape() != trace.activations.back().shape()) {
        throw DimensionError("backward: output gradient " + shape_to_string(output_grad.shape()) +
                             " does not match network output " +
                             shape_to_string(trace.activations.back().shape()));
    }
    Gradients grads;
    grads.per_layer.resize(layers.size());
    Tensor g = output_grad;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const Tensor& in = trace.activations[i];
        const Tensor& out = trace.activations[i + 1];
        g = std::visit(overloaded{
                           [&](const DenseLayer& l) {
                               BackwardResult r = dense_backward(l, in, out, g);
                               grads.per_layer[i] = std::move(r.grads);
                               return std::move(r.input_grad);
                           },
                           [&](const Conv2dLayer& l) {
                               BackwardResult r = conv2d_backward(l, in, g);
                               grads.per_layer[i] = std::move(r.grads);
                               return std::move(r.input_grad);
                           },
                           [&](const ActivationLayer& l) { return activation_backward(l.kind, out, g); },
                           [&](const MaxPool2x2Layer&) {
                               return maxpool2x2_backward(in.shape(), trace.argmax[i], g);
                           },
                           [&](const Upsample2xLayer&) { return upsample2x_backward(g); },
                       },
                       layers[i]);
    }
    grads.input_grad = std::move(g);
    return grads;
}

std::vector<ParamView> Network::parameters() {
    std::vector<ParamView> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i) + ".";
        std::visit(overloaded{
                       [&](DenseLayer& l) {
                           out.push_back({prefix + "weights", l.weights.shape(), l.weights.values(), true});
                           out.push_back({prefix + "bias", l.bias.shape(), l.bias.values(), false});
                       },
                       [&](Conv2dLayer& l) {
                           out.push_back({prefix + "kernels", l.kernels.shape(), l.kernels.values(), true});
                           out.push_back({prefix + "bias", l.bias.shape(), l.bias.values(), false});
                       },
                       [](auto&) {},
                   },
                   layers[i]);
    }
    return out;
}

std::vector<std::span<const double>> Network::flatten(const Gradients& grads) {
    std::vector<std::span<const double>> out;
    for (const LayerGrads& lg : grads.per_layer) {
        for (const Tensor& t : lg) out.push_back(t.values());
    }
    return out;
}

std::size_t Network::param_count() const {
    std::size_t total = 0;
    for (const Layer& layer : layers) {
        std::visit(overloaded{
                       [&](const DenseLayer& l) { total += l.param_count(); },
                       [&](const Conv2dLayer& l) { total += l.param_count(); },
                       [](const auto&) {},
                   },
                   layer);
    }
    return total;
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, SplitMix64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : t.values()) v = rng.uniform(-limit, limit);
}

DenseLayer make_dense(std::size_t in, std::size_t out, Activation activation, SplitMix64& rng) {
    DenseLayer layer{Tensor({in, out}), Tensor({out}), activation};
    glorot_uniform(layer.weights, in, out, rng);
    return layer;
}

Conv2dLayer make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, SplitMix64& rng) {
    Conv2dLayer layer{Tensor({out_ch, in_ch, kernel, kernel}), Tensor({out_ch})};
    glorot_uniform(layer.kernels, in_ch * kernel * kernel, out_ch * kernel * kernel, rng);
    return layer;
}

}  // namespace sheepweight
