#pragma once

#include "sheepweight/metrics.hpp"
#include "sheepweight/network.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace sheepweight {

/// Loss of a prediction against a target, with gradient w.r.t. the prediction.
using LossFn = std::function<LossWithGrad(const Tensor& prediction, const Tensor& target)>;

struct GradCheckOptions {
    double h = 1e-5;
    /// Adds (l2_lambda / 2) * sum(w^2) over regularized parameters to the loss.
    double l2_lambda = 0.0;
    /// When nonzero, only this many entries per tensor are perturbed, chosen
    /// with a generator seeded by sample_seed. Zero means every entry.
    std::size_t max_entries_per_tensor = 0;
    std::uint64_t sample_seed = 0;
    bool check_input = true;
    /// Skip entries whose +-h evaluation flips a ReLU or a max-pool winner;
    /// the central difference is not a derivative estimate there.
    bool skip_kinks = true;
    /// Applied to the analytic gradients before comparison (fault injection).
    std::function<void(const Network&, Network::Gradients&)> analytic_hook;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst;      // parameter (or "input") holding the worst entry
    std::size_t checked = 0;
    std::size_t skipped = 0;  // entries straddling a kink
};

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric) noexcept;

/// Central-difference check of every parameter (and optionally the input).
GradCheckReport grad_check(const Network& network, const LossFn& loss, const Tensor& input,
                           const Tensor& target, const GradCheckOptions& options);

/// Max relative error over all parameters with step h.
double grad_check(const Network& network, const LossFn& loss, const Tensor& input, const Tensor& target,
                  double h);

}  // namespace sheepweight
