#pragma once

// Finite-difference verification suite shared by `sheepweight gradcheck` and
// the acceptance run.

#include "sheepweight/gradcheck.hpp"
#include "sheepweight/network.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sheepweight {

struct GradcheckCase {
    std::string name;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    std::string worst;
    std::size_t seeds = 0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    bool passed = false;
};

struct GradcheckSuiteOptions {
    double h = 1e-5;
    std::size_t seeds = 20;
    std::uint64_t base_seed = 1;
    /// Corrupts analytic gradients of every case containing this layer kind.
    std::optional<LayerKind> inject_fault;
    /// Entries sampled per tensor for the full 16x16 segmenter (0 = all).
    std::size_t full_segmenter_entries = 12;
};

/// max(1e-4, h): the reference threshold at h <= 1e-4, growing linearly with
/// larger steps.
double gradcheck_tolerance(double h) noexcept;

std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& options);

/// Random linear functional sum(r_i * y_i); gives every output a generic upstream gradient.
LossFn weighted_sum_loss();

}  // namespace sheepweight
