#include "sheepweight/regressor.hpp"

#include "sheepweight/errors.hpp"
#include "sheepweight/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sheepweight {

void RegTrainConfig::validate() const {
    if (epochs == 0) throw ValidationError("regressor epochs must be >= 1");
    if (batch_size == 0) throw ValidationError("regressor batch size must be >= 1");
    adam.validate();
}

RegModel build_regressor(std::uint64_t seed) {
    SplitMix64 rng(seed);
    RegModel model;
    model.network.layers.emplace_back(make_dense(3, 10, Activation::relu, rng));
    model.network.layers.emplace_back(make_dense(10, 5, Activation::relu, rng));
    model.network.layers.emplace_back(make_dense(5, 1, Activation::linear, rng));
    check_regressor_layout(model);
    return model;
}

std::array<std::size_t, 3> layer_param_counts(const RegModel& model) {
    std::array<std::size_t, 3> counts{};
    if (model.network.layers.size() != 3) throw ValidationError("regressor must have exactly 3 layers");
    for (std::size_t i = 0; i < 3; ++i) {
        const auto* dense = std::get_if<DenseLayer>(&model.network.layers[i]);
        if (!dense) throw ValidationError("regressor layer " + std::to_string(i) + " is not dense");
        counts[i] = dense->param_count();
    }
    return counts;
}

void check_regressor_layout(const RegModel& model) {
    const auto counts = layer_param_counts(model);
    if (counts != kRegLayerParams || model.network.param_count() != kRegTotalParams) {
        throw ValidationError("regressor parameter counts must be 40/55/6 (101 total)");
    }
    const Activation expected[] = {Activation::relu, Activation::relu, Activation::linear};
    for (std::size_t i = 0; i < 3; ++i) {
        if (std::get<DenseLayer>(model.network.layers[i]).activation != expected[i]) {
            throw ValidationError("regressor layer " + std::to_string(i) + " has the wrong activation");
        }
    }
}

TrainHistory train_regressor(RegModel& model, std::span<const FeatureVector> features,
                             std::span<const double> weights_kg, const RegTrainConfig& config) {
    config.validate();
    if (features.size() != weights_kg.size()) {
        throw ValidationError("train_regressor: " + std::to_string(features.size()) + " feature rows but " +
                              std::to_string(weights_kg.size()) + " weights");
    }
    if (features.size() < 2) throw ValidationError("train_regressor needs at least 2 rows");
    for (const FeatureVector& fv : features) validate_features(fv);
    for (double w : weights_kg) {
        if (!std::isfinite(w)) throw ValidationError("train_regressor: non-finite target weight");
    }
    check_regressor_layout(model);

    model.scaler = fit_scaler(features);
    const Tensor inputs = transform(model.scaler, features);

    SplitMix64 rng(config.seed);
    AdamState adam(config.adam);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    TrainHistory history;
    Network::Trace trace;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::size_t n = end - start;
            Tensor x({n, 3});
            Tensor y({n, 1});
            for (std::size_t b = 0; b < n; ++b) {
                const std::size_t row = order[start + b];
                for (std::size_t c = 0; c < 3; ++c) x.at(b, c) = inputs.at(row, c);
                y[b] = weights_kg[row];
            }
            const Tensor pred = model.network.forward(x, trace);
            const LossWithGrad loss = mse(pred, y);
            const Network::Gradients grads = model.network.backward(trace, loss.grad);
            const auto params = model.network.parameters();
            const double penalty = l2_penalty(params, config.adam.l2_lambda);
            const auto grad_views = Network::flatten(grads);
            adam_step(params, grad_views, adam);
            weighted += (loss.loss.value + penalty) * static_cast<double>(n);
        }
        const double epoch_loss = weighted / static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss)) {
            throw NonFiniteError("train_regressor: non-finite loss at epoch " + std::to_string(epoch));
        }
        history.epoch_loss.push_back(epoch_loss);
    }
    return history;
}

double predict(const RegModel& model, const FeatureVector& fv) {
    return predict(model, std::span<const FeatureVector>(&fv, 1)).front();
}

std::vector<double> predict(const RegModel& model, std::span<const FeatureVector> rows) {
    if (!model.scaler.fitted) throw ValidationError("predict: regressor has not been trained (scaler unfitted)");
    if (rows.empty()) return {};
    const Tensor out = model.network.forward(transform(model.scaler, rows));
    std::vector<double> preds(out.values().begin(), out.values().end());
    for (double p : preds) {
        if (!std::isfinite(p)) throw NonFiniteError("predict: non-finite prediction");
    }
    return preds;
}

}  // namespace sheepweight
