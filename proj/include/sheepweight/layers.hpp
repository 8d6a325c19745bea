#pragma once

// Differentiable layer set. Forward functions are pure; backward functions
// take whatever the forward pass produced and return the input gradient
// together with one gradient tensor per parameter (same order and shapes as
// the layer's parameters).

#include "sheepweight/tensor.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace sheepweight {

enum class Activation { linear, relu, sigmoid };

std::string_view activation_name(Activation a) noexcept;
Activation parse_activation(std::string_view name);

/// Fully connected layer: activation(x * weights + bias).
struct DenseLayer {
    Tensor weights;  // [in, out]
    Tensor bias;     // [out]
    Activation activation = Activation::linear;

    std::size_t in_features() const { return weights.dim(0); }
    std::size_t out_features() const { return weights.dim(1); }
    std::size_t param_count() const { return weights.size() + bias.size(); }
};

/// Stride-1 cross-correlation with zero "same" padding. Kernel size is odd.
struct Conv2dLayer {
    Tensor kernels;  // [out_ch, in_ch, k, k]
    Tensor bias;     // [out_ch]

    std::size_t out_channels() const { return kernels.dim(0); }
    std::size_t in_channels() const { return kernels.dim(1); }
    std::size_t kernel_size() const { return kernels.dim(2); }
    std::size_t param_count() const { return kernels.size() + bias.size(); }
};

struct ActivationLayer {
    Activation kind = Activation::relu;
};

struct MaxPool2x2Layer {};
struct Upsample2xLayer {};

/// Gradients for one layer, mirroring its parameter list.
using LayerGrads = std::vector<Tensor>;

struct BackwardResult {
    Tensor input_grad;
    LayerGrads grads;
};

struct PoolResult {
    Tensor output;
    std::vector<std::size_t> argmax;  // flat input index of each output element
};

Tensor relu(const Tensor& x);
/// Logistic function, evaluated without overflow and kept strictly inside (0, 1).
Tensor sigmoid(const Tensor& x);
Tensor apply_activation(Tensor x, Activation a);

/// Gradient through relu given the forward input.
Tensor relu_backward(const Tensor& input, const Tensor& upstream);
/// Gradient through an activation expressed in terms of its forward output.
Tensor activation_backward(Activation a, const Tensor& output, const Tensor& upstream);

Tensor dense_forward(const Tensor& x, const DenseLayer& layer);
BackwardResult dense_backward(const DenseLayer& layer, const Tensor& input, const Tensor& output,
                              const Tensor& upstream);

Tensor conv2d_forward(const Tensor& x, const Conv2dLayer& layer);
BackwardResult conv2d_backward(const Conv2dLayer& layer, const Tensor& input, const Tensor& upstream);

PoolResult maxpool2x2(const Tensor& x);
Tensor maxpool2x2_backward(const Shape& input_shape, std::span<const std::size_t> argmax,
                           const Tensor& upstream);

Tensor upsample2x_nearest(const Tensor& x);
Tensor upsample2x_backward(const Tensor& upstream);

}  // namespace sheepweight
