#pragma once

#include "sheepweight/layers.hpp"
#include "sheepweight/random.hpp"
#include "sheepweight/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sheepweight {

using Layer = std::variant<DenseLayer, Conv2dLayer, ActivationLayer, MaxPool2x2Layer, Upsample2xLayer>;

enum class LayerKind { dense, conv2d, activation, maxpool2x2, upsample2x };

LayerKind layer_kind(const Layer& layer) noexcept;
std::string_view layer_kind_name(LayerKind kind) noexcept;

/// Mutable view of one parameter tensor. Only weight matrices and kernels are
/// regularized; biases never are.
struct ParamView {
    std::string name;
    Shape shape;
    std::span<double> values;
    bool regularized;
};

/// Sequential stack of layers with hand-written backpropagation.
struct Network {
    std::vector<Layer> layers;

    /// Everything backward() needs from a forward pass.
    struct Trace {
        std::vector<Tensor> activations;  // activations[0] is the input, [i+1] the output of layer i
        std::vector<std::vector<std::size_t>> argmax;  // per layer, empty unless max-pool
    };

    struct Gradients {
        Tensor input_grad;
        std::vector<LayerGrads> per_layer;
    };

    Tensor forward(const Tensor& input) const;
    Tensor forward(const Tensor& input, Trace& trace) const;
    Gradients backward(const Trace& trace, const Tensor& output_grad) const;

    std::vector<ParamView> parameters();
    /// Gradient spans in the same order as parameters().
    static std::vector<std::span<const double>> flatten(const Gradients& grads);

    std::size_t param_count() const;
};

/// Glorot-uniform fill with limit sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, SplitMix64& rng);

DenseLayer make_dense(std::size_t in, std::size_t out, Activation activation, SplitMix64& rng);
Conv2dLayer make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, SplitMix64& rng);

}  // namespace sheepweight
