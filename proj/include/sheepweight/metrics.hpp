#pragma once

#include "sheepweight/seg_mask.hpp"
#include "sheepweight/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace sheepweight {

struct LossValue {
    double value = 0.0;
    std::size_t count = 0;
};

/// Loss plus its gradient with respect to the predictions.
struct LossWithGrad {
    LossValue loss;
    Tensor grad;
};

inline constexpr double kBceClamp = 1e-7;

/// Mean Bernoulli cross-entropy -[p ln q + (1-p) ln(1-q)]. The argument of
/// each logarithm is floored at 1e-7 (q >= 1e-7 for p = 1, q <= 1 - 1e-7 for
/// p = 0). Targets must be exactly 0 or 1.
LossWithGrad bce(const Tensor& targets, const Tensor& predictions);

/// Mean squared error over predictions of any shape.
LossWithGrad mse(const Tensor& predictions, const Tensor& targets);
LossValue mse(std::span<const double> predictions, std::span<const double> targets);
std::vector<double> mse_gradient(std::span<const double> predictions, std::span<const double> targets);

/// Coefficient of determination 1 - SS_res / SS_tot. Throws
/// DegenerateVarianceError when y is constant.
double r2_score(std::span<const double> y, std::span<const double> f);

/// |a and b| / |a or b|; 1 when both masks are empty.
double iou(const SegMask& a, const SegMask& b);

}  // namespace sheepweight
