#include "sheepweight/verification.hpp"

#include "sheepweight/metrics.hpp"
#include "sheepweight/random.hpp"
#include "sheepweight/regressor.hpp"
#include "sheepweight/segmenter.hpp"

#include <algorithm>
#include <functional>

namespace sheepweight {
namespace {

Tensor random_tensor(Shape shape, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

Tensor random_binary(Shape shape, SplitMix64& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return t;
}

bool contains_kind(const Network& net, LayerKind kind) {
    return std::any_of(net.layers.begin(), net.layers.end(), [&](const Layer& l) { return layer_kind(l) == kind; });
}

struct CaseInput {
    Network network;
    LossFn loss;
    Tensor input;
    Tensor target;
    GradCheckOptions options;
};

using CaseFactory = std::function<CaseInput(SplitMix64&)>;

GradcheckCase run_case(const std::string& name, const CaseFactory& make, const GradcheckSuiteOptions& suite) {
    GradcheckCase result;
    result.name = name;
    result.tolerance = gradcheck_tolerance(suite.h);
    for (std::size_t s = 0; s < suite.seeds; ++s) {
        SplitMix64 rng(derive_seed(suite.base_seed, s * 7919 + std::hash<std::string>{}(name) % 7919));
        CaseInput c = make(rng);
        c.options.h = suite.h;
        c.options.sample_seed = rng.next();
        if (suite.inject_fault && contains_kind(c.network, *suite.inject_fault)) {
            c.options.analytic_hook = [](const Network&, Network::Gradients& g) {
                for (auto& layer : g.per_layer) {
                    for (Tensor& t : layer) {
                        for (double& v : t.values()) v *= 1.1;
                    }
                }
                for (double& v : g.input_grad.values()) v *= 1.1;
            };
        }
        const GradCheckReport r = grad_check(c.network, c.loss, c.input, c.target, c.options);
        result.checked += r.checked;
        result.skipped += r.skipped;
        if (s == 0 || r.max_rel_error > result.max_rel_error) {
            result.max_rel_error = r.max_rel_error;
            result.worst = r.worst;
        }
    }
    result.seeds = suite.seeds;
    result.passed = result.max_rel_error < result.tolerance;
    return result;
}

LossFn bce_loss() {
    return [](const Tensor& pred, const Tensor& target) { return bce(target, pred); };
}

LossFn mse_loss() {
    return [](const Tensor& pred, const Tensor& target) { return mse(pred, target); };
}

}  // namespace

double gradcheck_tolerance(double h) noexcept {
    return std::max(1e-4, h);
}

LossFn weighted_sum_loss() {
    // The target tensor carries the weights r.
    return [](const Tensor& pred, const Tensor& weights) {
        double v = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) v += pred[i] * weights[i];
        return LossWithGrad{{v, pred.size()}, weights.reshaped(pred.shape())};
    };
}

std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& suite) {
    std::vector<GradcheckCase> out;

    for (Activation act : {Activation::linear, Activation::relu, Activation::sigmoid}) {
        out.push_back(run_case("dense/" + std::string(activation_name(act)),
                               [act](SplitMix64& rng) {
                                   CaseInput c;
                                   DenseLayer l{random_tensor({4, 3}, rng), random_tensor({3}, rng), act};
                                   c.network.layers.emplace_back(std::move(l));
                                   c.loss = weighted_sum_loss();
                                   c.input = random_tensor({5, 4}, rng);
                                   c.target = random_tensor({5, 3}, rng);
                                   return c;
                               },
                               suite));
    }
    out.push_back(run_case("conv2d",
                           [](SplitMix64& rng) {
                               CaseInput c;
                               c.network.layers.emplace_back(
                                   Conv2dLayer{random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
                               c.loss = weighted_sum_loss();
                               c.input = random_tensor({2, 2, 5, 6}, rng);
                               c.target = random_tensor({2, 3, 5, 6}, rng);
                               return c;
                           },
                           suite));
    for (Activation act : {Activation::relu, Activation::sigmoid}) {
        out.push_back(run_case("activation/" + std::string(activation_name(act)),
                               [act](SplitMix64& rng) {
                                   CaseInput c;
                                   c.network.layers.emplace_back(ActivationLayer{act});
                                   c.loss = weighted_sum_loss();
                                   c.input = random_tensor({2, 3, 4, 4}, rng, -3.0, 3.0);
                                   c.target = random_tensor({2, 3, 4, 4}, rng);
                                   return c;
                               },
                               suite));
    }
    out.push_back(run_case("maxpool2x2",
                           [](SplitMix64& rng) {
                               CaseInput c;
                               c.network.layers.emplace_back(MaxPool2x2Layer{});
                               c.loss = weighted_sum_loss();
                               c.input = random_tensor({2, 2, 6, 6}, rng);
                               c.target = random_tensor({2, 2, 3, 3}, rng);
                               return c;
                           },
                           suite));
    out.push_back(run_case("upsample2x",
                           [](SplitMix64& rng) {
                               CaseInput c;
                               c.network.layers.emplace_back(Upsample2xLayer{});
                               c.loss = weighted_sum_loss();
                               c.input = random_tensor({1, 2, 3, 3}, rng);
                               c.target = random_tensor({1, 2, 6, 6}, rng);
                               return c;
                           },
                           suite));
    out.push_back(run_case("regressor (mse + l2)",
                           [](SplitMix64& rng) {
                               CaseInput c;
                               RegModel m = build_regressor(rng.next());
                               for (ParamView& p : m.network.parameters()) {
                                   if (!p.regularized) {
                                       for (double& v : p.values) v = rng.uniform(-0.5, 0.5);
                                   }
                               }
                               c.network = std::move(m.network);
                               c.loss = mse_loss();
                               c.input = random_tensor({12, 3}, rng, -2.0, 2.0);
                               c.target = random_tensor({12, 1}, rng, -2.0, 2.0);
                               c.options.l2_lambda = 1e-3;
                               return c;
                           },
                           suite));
    out.push_back(run_case("segmenter-small (2 conv, 8x8, bce)",
                           [](SplitMix64& rng) {
                               CaseInput c;
                               c.network.layers.emplace_back(make_conv2d(3, 4, 3, rng));
                               c.network.layers.emplace_back(ActivationLayer{Activation::relu});
                               c.network.layers.emplace_back(make_conv2d(4, 1, 3, rng));
                               c.network.layers.emplace_back(ActivationLayer{Activation::sigmoid});
                               for (ParamView& p : c.network.parameters()) {
                                   if (!p.regularized) {
                                       for (double& v : p.values) v = rng.uniform(-0.2, 0.2);
                                   }
                               }
                               c.loss = bce_loss();
                               c.input = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
                               c.target = random_binary({2, 1, 8, 8}, rng);
                               return c;
                           },
                           suite));
    const std::size_t entries = suite.full_segmenter_entries;
    out.push_back(run_case("segmenter-full (16x16, bce)",
                           [entries](SplitMix64& rng) {
                               CaseInput c;
                               SegModel m = build_seg_model({16, 16}, rng.next());
                               for (ParamView& p : m.network.parameters()) {
                                   if (!p.regularized) {
                                       for (double& v : p.values) v = rng.uniform(0.0, 0.2);
                                   }
                               }
                               c.network = std::move(m.network);
                               c.loss = bce_loss();
                               c.input = random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0);
                               c.target = random_binary({1, 1, 16, 16}, rng);
                               c.options.l2_lambda = 1e-3;
                               c.options.max_entries_per_tensor = entries;
                               return c;
                           },
                           suite));
    return out;
}

}  // namespace sheepweight
