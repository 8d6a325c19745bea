#include "sheepweight/optimizer.hpp"

#include "sheepweight/errors.hpp"
#include "sheepweight/kernels.hpp"

#include <cmath>
#include <string>

namespace sheepweight {

void AdamConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("adam: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("adam: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("adam: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw ValidationError("adam: eps must be > 0");
    if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ValidationError("adam: l2_lambda must be >= 0");
}

void adam_step(std::span<const ParamView> params, std::span<const std::span<const double>> grads,
               AdamState& state) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam: " + std::to_string(params.size()) + " parameters but " +
                             std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (params[p].values.size() != grads[p].size()) {
            throw DimensionError("adam: gradient for " + params[p].name + " has " +
                                 std::to_string(grads[p].size()) + " entries, parameter has " +
                                 std::to_string(params[p].values.size()));
        }
        for (std::size_t i = 0; i < grads[p].size(); ++i) {
            if (!std::isfinite(grads[p][i])) {
                throw NonFiniteError("adam: non-finite gradient in " + params[p].name + " at index " +
                                     std::to_string(i));
            }
        }
    }
    if (state.m.empty()) {
        for (const ParamView& p : params) {
            state.m.emplace_back(p.values.size(), 0.0);
            state.v.emplace_back(p.values.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw DimensionError("adam: state does not mirror parameters");
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (state.m[p].size() != params[p].values.size()) {
            throw DimensionError("adam: state does not mirror parameter " + params[p].name);
        }
    }

    ++state.step;
    const AdamConfig& cfg = state.config;
    const double t = static_cast<double>(state.step);
    kernels::AdamCoefficients coeff{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, 0.0,
                                    1.0 - std::pow(cfg.beta1, t), 1.0 - std::pow(cfg.beta2, t)};
    const auto& k = kernels::active();
    for (std::size_t p = 0; p < params.size(); ++p) {
        coeff.l2_lambda = params[p].regularized ? cfg.l2_lambda : 0.0;
        k.adam_update(coeff, grads[p].data(), params[p].values.data(), state.m[p].data(), state.v[p].data(),
                      grads[p].size());
    }
}

double l2_penalty(std::span<const ParamView> params, double l2_lambda) {
    if (!(l2_lambda >= 0.0)) throw ValidationError("l2_penalty: lambda must be >= 0");
    if (l2_lambda == 0.0) return 0.0;
    double acc = 0.0;
    for (const ParamView& p : params) {
        if (!p.regularized) continue;
        for (double w : p.values) acc += w * w;
    }
    return 0.5 * l2_lambda * acc;
}

}  // namespace sheepweight
