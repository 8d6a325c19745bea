#pragma once

#include "sheepweight/network.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sheepweight {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Classic L2: lambda * w is added to the gradient of regularized tensors.
    double l2_lambda = 1e-3;

    void validate() const;
};

/// Adam moments for one parameter set. m and v are sized on the first step
/// and must keep mirroring the parameters afterwards.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    explicit AdamState(AdamConfig cfg = {}) : config(cfg) { config.validate(); }
};

/// One Adam update. Throws NonFiniteError (naming the parameter) before
/// touching anything if a gradient is NaN or infinite.
void adam_step(std::span<const ParamView> params, std::span<const std::span<const double>> grads,
               AdamState& state);

/// (lambda / 2) * sum of squared regularized weights.
double l2_penalty(std::span<const ParamView> params, double l2_lambda);

}  // namespace sheepweight
