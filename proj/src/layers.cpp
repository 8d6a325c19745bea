#include "sheepweight/layers.hpp"

#include "sheepweight/errors.hpp"
#include "sheepweight/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sheepweight {
namespace {

constexpr double kSigmoidUpper = 1.0 - 0x1.0p-53;  // largest double below 1
constexpr double kSigmoidLower = std::numeric_limits<double>::denorm_min();

double logistic(double x) noexcept {
    double y;
    if (x >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        y = e / (1.0 + e);
    }
    return std::clamp(y, kSigmoidLower, kSigmoidUpper);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(what) + ": shape " + shape_to_string(a.shape()) +
                             " does not match " + shape_to_string(b.shape()));
    }
}

// Output columns [lo, hi) whose input column x + offset lies inside [0, width).
struct ColumnRange {
    std::size_t lo;
    std::size_t hi;
};

ColumnRange valid_columns(std::size_t width, std::ptrdiff_t offset) {
    const auto w = static_cast<std::ptrdiff_t>(width);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -offset);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(w, w - offset);
    if (hi <= lo) return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

void check_conv_input(const Tensor& x, const Conv2dLayer& layer) {
    require_rank(x, 4, "conv2d");
    if (x.dim(1) != layer.in_channels()) {
        throw DimensionError("conv2d: input shape " + shape_to_string(x.shape()) + " has " +
                             std::to_string(x.dim(1)) + " channels but kernels " +
                             shape_to_string(layer.kernels.shape()) + " expect " +
                             std::to_string(layer.in_channels()));
    }
    if (layer.kernel_size() % 2 == 0 || layer.kernels.dim(3) != layer.kernel_size()) {
        throw DimensionError("conv2d: kernels must be square with odd size, got " +
                             shape_to_string(layer.kernels.shape()));
    }
}

}  // namespace

std::string_view activation_name(Activation a) noexcept {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "linear";
}

Activation parse_activation(std::string_view name) {
    if (name == "linear") return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw ValidationError("unknown activation '" + std::string(name) + "'");
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.values()) v = logistic(v);
    return out;
}

Tensor apply_activation(Tensor x, Activation a) {
    switch (a) {
        case Activation::linear: return x;
        case Activation::relu: return relu(x);
        case Activation::sigmoid: return sigmoid(x);
    }
    return x;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    require_same_shape(input, upstream, "relu backward");
    Tensor out = upstream;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(input[i] > 0.0)) out[i] = 0.0;
    }
    return out;
}

Tensor activation_backward(Activation a, const Tensor& output, const Tensor& upstream) {
    require_same_shape(output, upstream, "activation backward");
    switch (a) {
        case Activation::linear:
            return upstream;
        case Activation::relu:
            // relu(z) > 0 exactly when z > 0, so the output carries the mask.
            return relu_backward(output, upstream);
        case Activation::sigmoid: {
            Tensor out = upstream;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= output[i] * (1.0 - output[i]);
            return out;
        }
    }
    return upstream;
}

Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
    require_rank(x, 2, "dense");
    if (x.dim(1) != layer.in_features()) {
        throw DimensionError("dense: input shape " + shape_to_string(x.shape()) +
                             " incompatible with weights " + shape_to_string(layer.weights.shape()));
    }
    const std::size_t n = x.dim(0);
    const std::size_t in = layer.in_features();
    const std::size_t out_dim = layer.out_features();
    const auto& k = kernels::active();
    Tensor out({n, out_dim});
    for (std::size_t r = 0; r < n; ++r) {
        double* row = out.data() + r * out_dim;
        std::copy(layer.bias.data(), layer.bias.data() + out_dim, row);
        for (std::size_t i = 0; i < in; ++i) {
            k.axpy(x.at(r, i), layer.weights.data() + i * out_dim, row, out_dim);
        }
    }
    return apply_activation(std::move(out), layer.activation);
}

BackwardResult dense_backward(const DenseLayer& layer, const Tensor& input, const Tensor& output,
                              const Tensor& upstream) {
    require_rank(input, 2, "dense backward");
    if (upstream.shape() != output.shape() || output.rank() != 2 || output.dim(0) != input.dim(0) ||
        output.dim(1) != layer.out_features() || input.dim(1) != layer.in_features()) {
        throw DimensionError("dense backward: upstream " + shape_to_string(upstream.shape()) +
                             " does not match forward output " + shape_to_string(output.shape()));
    }
    const Tensor g = activation_backward(layer.activation, output, upstream);
    const std::size_t n = input.dim(0);
    const std::size_t in = layer.in_features();
    const std::size_t out_dim = layer.out_features();
    const auto& k = kernels::active();

    Tensor dw = Tensor::zeros(layer.weights.shape());
    Tensor db = Tensor::zeros(layer.bias.shape());
    Tensor dx = Tensor::zeros(input.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const double* g_row = g.data() + r * out_dim;
        k.axpy(1.0, g_row, db.data(), out_dim);
        for (std::size_t i = 0; i < in; ++i) {
            k.axpy(input.at(r, i), g_row, dw.data() + i * out_dim, out_dim);
            dx.at(r, i) = k.dot(g_row, layer.weights.data() + i * out_dim, out_dim);
        }
    }
    return {std::move(dx), {std::move(dw), std::move(db)}};
}

Tensor conv2d_forward(const Tensor& x, const Conv2dLayer& layer) {
    check_conv_input(x, layer);
    const std::size_t n = x.dim(0), in_ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t out_ch = layer.out_channels();
    const std::size_t ks = layer.kernel_size();
    const auto pad = static_cast<std::ptrdiff_t>(ks / 2);
    const auto& k = kernels::active();

    Tensor out({n, out_ch, h, w});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            double* plane = out.data() + (b * out_ch + o) * h * w;
            std::fill(plane, plane + h * w, layer.bias[o]);
            for (std::size_t c = 0; c < in_ch; ++c) {
                const double* src = x.data() + (b * in_ch + c) * h * w;
                for (std::size_t ky = 0; ky < ks; ++ky) {
                    for (std::size_t kx = 0; kx < ks; ++kx) {
                        const double weight = layer.kernels.at(o, c, ky, kx);
                        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                        const ColumnRange rows = valid_columns(h, dy);
                        const ColumnRange cols = valid_columns(w, dx);
                        const std::size_t len = cols.hi - cols.lo;
                        if (len == 0) continue;
                        for (std::size_t y = rows.lo; y < rows.hi; ++y) {
                            const double* in_row = src + (y + dy) * w + (cols.lo + dx);
                            k.axpy(weight, in_row, plane + y * w + cols.lo, len);
                        }
                    }
                }
            }
        }
    }
    return out;
}

BackwardResult conv2d_backward(const Conv2dLayer& layer, const Tensor& input, const Tensor& upstream) {
    check_conv_input(input, layer);
    const std::size_t n = input.dim(0), in_ch = input.dim(1), h = input.dim(2), w = input.dim(3);
    const std::size_t out_ch = layer.out_channels();
    if (upstream.shape() != Shape{n, out_ch, h, w}) {
        throw DimensionError("conv2d backward: upstream " + shape_to_string(upstream.shape()) +
                             " does not match forward output " +
                             shape_to_string(Shape{n, out_ch, h, w}));
    }
    const std::size_t ks = layer.kernel_size();
    const auto pad = static_cast<std::ptrdiff_t>(ks / 2);
    const auto& k = kernels::active();

    Tensor dk = Tensor::zeros(layer.kernels.shape());
    Tensor db = Tensor::zeros(layer.bias.shape());
    Tensor dx = Tensor::zeros(input.shape());
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            const double* g_plane = upstream.data() + (b * out_ch + o) * h * w;
            double bias_acc = 0.0;
            for (std::size_t i = 0; i < h * w; ++i) bias_acc += g_plane[i];
            db[o] += bias_acc;
            for (std::size_t c = 0; c < in_ch; ++c) {
                const double* src = input.data() + (b * in_ch + c) * h * w;
                double* dsrc = dx.data() + (b * in_ch + c) * h * w;
                for (std::size_t ky = 0; ky < ks; ++ky) {
                    for (std::size_t kx = 0; kx < ks; ++kx) {
                        const double weight = layer.kernels.at(o, c, ky, kx);
                        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                        const std::ptrdiff_t dxo = static_cast<std::ptrdiff_t>(kx) - pad;
                        const ColumnRange rows = valid_columns(h, dy);
                        const ColumnRange cols = valid_columns(w, dxo);
                        const std::size_t len = cols.hi - cols.lo;
                        if (len == 0) continue;
                        double acc = 0.0;
                        for (std::size_t y = rows.lo; y < rows.hi; ++y) {
                            const double* g_row = g_plane + y * w + cols.lo;
                            const std::size_t src_off = (y + dy) * w + (cols.lo + dxo);
                            acc += k.dot(g_row, src + src_off, len);
                            k.axpy(weight, g_row, dsrc + src_off, len);
                        }
                        dk.at(o, c, ky, kx) += acc;
                    }
                }
            }
        }
    }
    return {std::move(dx), {std::move(dk), std::move(db)}};
}

PoolResult maxpool2x2(const Tensor& x) {
    require_rank(x, 4, "maxpool2x2");
    const std::size_t n = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw DimensionError("maxpool2x2 needs even spatial dims, got " + shape_to_string(x.shape()) +
                             "; pad or resize the input");
    }
    const std::size_t oh = h / 2, ow = w / 2;
    PoolResult result{Tensor({n, ch, oh, ow}), std::vector<std::size_t>(n * ch * oh * ow)};
    std::size_t out_i = 0;
    for (std::size_t plane = 0; plane < n * ch; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t xo = 0; xo < ow; ++xo, ++out_i) {
                std::size_t best = base + (2 * y) * w + 2 * xo;
                const std::size_t candidates[3] = {best + 1, best + w, best + w + 1};
                for (std::size_t c : candidates) {
                    if (x[c] > x[best]) best = c;
                }
                result.output[out_i] = x[best];
                result.argmax[out_i] = best;
            }
        }
    }
    return result;
}

Tensor maxpool2x2_backward(const Shape& input_shape, std::span<const std::size_t> argmax,
                           const Tensor& upstream) {
    if (input_shape.size() != 4 || argmax.size() != upstream.size() ||
        upstream.shape() != Shape{input_shape[0], input_shape[1], input_shape[2] / 2, input_shape[3] / 2}) {
        throw DimensionError("maxpool2x2 backward: upstream " + shape_to_string(upstream.shape()) +
                             " does not match input " + shape_to_string(input_shape));
    }
    Tensor dx = Tensor::zeros(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += upstream[i];
    return dx;
}

Tensor upsample2x_nearest(const Tensor& x) {
    require_rank(x, 4, "upsample2x");
    const std::size_t n = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor out({n, ch, 2 * h, 2 * w});
    for (std::size_t plane = 0; plane < n * ch; ++plane) {
        const double* src = x.data() + plane * h * w;
        double* dst = out.data() + plane * 4 * h * w;
        for (std::size_t y = 0; y < 2 * h; ++y) {
            for (std::size_t xo = 0; xo < 2 * w; ++xo) dst[y * 2 * w + xo] = src[(y / 2) * w + xo / 2];
        }
    }
    return out;
}

Tensor upsample2x_backward(const Tensor& upstream) {
    require_rank(upstream, 4, "upsample2x backward");
    const std::size_t n = upstream.dim(0), ch = upstream.dim(1), h2 = upstream.dim(2), w2 = upstream.dim(3);
    if (h2 % 2 != 0 || w2 % 2 != 0) {
        throw DimensionError("upsample2x backward: odd upstream shape " + shape_to_string(upstream.shape()));
    }
    const std::size_t h = h2 / 2, w = w2 / 2;
    Tensor dx({n, ch, h, w});
    for (std::size_t plane = 0; plane < n * ch; ++plane) {
        const double* src = upstream.data() + plane * h2 * w2;
        double* dst = dx.data() + plane * h * w;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t xo = 0; xo < w; ++xo) {
                const double* a = src + (2 * y) * w2 + 2 * xo;
                dst[y * w + xo] = (a[0] + a[1]) + (a[w2] + a[w2 + 1]);
            }
        }
    }
    return dx;
}

}  // namespace sheepweight
