#include "sheepweight/metrics.hpp"

#include "sheepweight/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sheepweight {
namespace {

void require_equal_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length " + std::to_string(a) + " vs " +
                             std::to_string(b));
    }
    if (a == 0) throw ValidationError(std::string(what) + ": empty input");
}

}  // namespace

LossWithGrad bce(const Tensor& targets, const Tensor& predictions) {
    if (targets.shape() != predictions.shape()) {
        throw DimensionError("bce: targets " + shape_to_string(targets.shape()) + " vs predictions " +
                             shape_to_string(predictions.shape()));
    }
    const std::size_t n = targets.size();
    if (n == 0) throw ValidationError("bce: empty input");
    const double inv_n = 1.0 / static_cast<double>(n);
    LossWithGrad out{{0.0, n}, Tensor(predictions.shape())};
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = targets[i];
        if (p != 0.0 && p != 1.0) {
            throw ValidationError("bce: target at index " + std::to_string(i) + " is not 0 or 1");
        }
        // Only the side that enters the logarithm is clamped, so a prediction
        // equal to its target costs exactly zero.
        if (p == 1.0) {
            const double q = std::max(predictions[i], kBceClamp);
            total -= std::log(q);
            out.grad[i] = -inv_n / q;
        } else {
            const double q = std::min(predictions[i], 1.0 - kBceClamp);
            total -= std::log1p(-q);
            out.grad[i] = inv_n / (1.0 - q);
        }
    }
    out.loss.value = total * inv_n;
    return out;
}

LossValue mse(std::span<const double> predictions, std::span<const double> targets) {
    require_equal_lengths(predictions.size(), targets.size(), "mse");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        total += d * d;
    }
    return {total / static_cast<double>(predictions.size()), predictions.size()};
}

std::vector<double> mse_gradient(std::span<const double> predictions, std::span<const double> targets) {
    require_equal_lengths(predictions.size(), targets.size(), "mse");
    const double scale = 2.0 / static_cast<double>(predictions.size());
    std::vector<double> grad(predictions.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = scale * (predictions[i] - targets[i]);
    return grad;
}

LossWithGrad mse(const Tensor& predictions, const Tensor& targets) {
    if (predictions.shape() != targets.shape()) {
        throw DimensionError("mse: predictions " + shape_to_string(predictions.shape()) + " vs targets " +
                             shape_to_string(targets.shape()));
    }
    return {mse(predictions.values(), targets.values()),
            Tensor(predictions.shape(), mse_gradient(predictions.values(), targets.values()))};
}

double r2_score(std::span<const double> y, std::span<const double> f) {
    require_equal_lengths(y.size(), f.size(), "r2_score");
    if (y.size() < 2) throw ValidationError("r2_score needs at least 2 values");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - f[i]) * (y[i] - f[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) throw DegenerateVarianceError("r2_score: observed values have zero variance");
    return 1.0 - ss_res / ss_tot;
}

double iou(const SegMask& a, const SegMask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionError("iou: mask " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                             " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
        const bool x = a.bits()[i] != 0;
        const bool y = b.bits()[i] != 0;
        inter += x && y;
        uni += x || y;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace sheepweight
