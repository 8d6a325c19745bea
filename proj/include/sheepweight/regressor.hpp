#pragma once

#include "sheepweight/features.hpp"
#include "sheepweight/network.hpp"
#include "sheepweight/optimizer.hpp"
#include "sheepweight/segmenter.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace sheepweight {

/// Weight regressor: 3 -> 10 (relu) -> 5 (relu) -> 1 (linear).
struct RegModel {
    Network network;
    Scaler scaler;
};

inline constexpr std::array<std::size_t, 3> kRegLayerParams{40, 55, 6};
inline constexpr std::size_t kRegTotalParams = 101;

struct RegTrainConfig {
    std::size_t epochs = 2000;
    std::size_t batch_size = 8;
    AdamConfig adam{};
    std::uint64_t seed = 7;

    void validate() const;
};

RegModel build_regressor(std::uint64_t seed);

/// Parameter count of each dense layer, in order.
std::array<std::size_t, 3> layer_param_counts(const RegModel& model);

/// Throws ValidationError unless the network has the 3-10-5-1 layout.
void check_regressor_layout(const RegModel& model);

/// Fits the scaler on `features`, then minimizes MSE + L2 with Adam. The
/// history holds the per-epoch mean of (batch MSE + L2 penalty).
TrainHistory train_regressor(RegModel& model, std::span<const FeatureVector> features,
                             std::span<const double> weights_kg, const RegTrainConfig& config);

double predict(const RegModel& model, const FeatureVector& fv);
std::vector<double> predict(const RegModel& model, std::span<const FeatureVector> rows);

}  // namespace sheepweight
