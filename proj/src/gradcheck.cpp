#include "sheepweight/gradcheck.hpp"

#include "sheepweight/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sheepweight {
namespace {

double l2_term(Network& net, double lambda) {
    if (lambda == 0.0) return 0.0;
    double acc = 0.0;
    for (const ParamView& p : net.parameters()) {
        if (!p.regularized) continue;
        for (double w : p.values) acc += w * w;
    }
    return 0.5 * lambda * acc;
}

// ReLU on/off states and max-pool winners of one forward pass.
using KinkPattern = std::vector<std::vector<std::size_t>>;

bool is_relu_layer(const Layer& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->activation == Activation::relu;
    if (const auto* a = std::get_if<ActivationLayer>(&layer)) return a->kind == Activation::relu;
    return false;
}

KinkPattern kink_pattern(const Network& net, const Network::Trace& trace) {
    KinkPattern out;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (is_relu_layer(net.layers[i])) {
            std::vector<std::size_t> on;
            const Tensor& y = trace.activations[i + 1];
            for (std::size_t j = 0; j < y.size(); ++j) {
                if (y[j] > 0.0) on.push_back(j);
            }
            out.push_back(std::move(on));
        } else if (!trace.argmax[i].empty()) {
            out.push_back(trace.argmax[i]);
        }
    }
    return out;
}

struct Evaluation {
    double loss;
    bool same_pattern;
};

Evaluation evaluate(Network& net, const LossFn& loss, const Tensor& input, const Tensor& target, double lambda,
                    const KinkPattern* reference) {
    if (reference == nullptr) return {loss(net.forward(input), target).loss.value + l2_term(net, lambda), true};
    Network::Trace trace;
    const Tensor y = net.forward(input, trace);
    return {loss(y, target).loss.value + l2_term(net, lambda), kink_pattern(net, trace) == *reference};
}

std::vector<std::size_t> entries_to_check(std::size_t size, const GradCheckOptions& options, SplitMix64& rng) {
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (options.max_entries_per_tensor == 0 || size <= options.max_entries_per_tensor) return idx;
    rng.shuffle(idx);
    idx.resize(options.max_entries_per_tensor);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

double relative_error(double analytic, double numeric) noexcept {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const Network& network, const LossFn& loss, const Tensor& input,
                           const Tensor& target, const GradCheckOptions& options) {
    if (!(options.h > 0.0)) throw ValidationError("grad_check: step h must be positive");
    if (!input.all_finite() || !target.all_finite()) throw NonFiniteError("grad_check: non-finite input");

    Network net = network;
    Network::Trace trace;
    const Tensor prediction = net.forward(input, trace);
    Network::Gradients grads = net.backward(trace, loss(prediction, target).grad);
    const KinkPattern base_pattern = kink_pattern(net, trace);
    const KinkPattern* reference = options.skip_kinks ? &base_pattern : nullptr;
    if (options.analytic_hook) options.analytic_hook(net, grads);

    auto params = net.parameters();
    const auto grad_views = Network::flatten(grads);
    SplitMix64 rng(options.sample_seed);
    GradCheckReport report;
    const double h = options.h;

    auto record = [&](const Evaluation& up, const Evaluation& down, double analytic, const std::string& name) {
        if (!up.same_pattern || !down.same_pattern) {
            ++report.skipped;
            return;
        }
        const double numeric = (up.loss - down.loss) / (2.0 * h);
        const double err = relative_error(analytic, numeric);
        ++report.checked;
        if (report.worst.empty() || err > report.max_rel_error) {
            report.max_rel_error = err;
            report.worst = name;
        }
    };

    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i : entries_to_check(params[p].values.size(), options, rng)) {
            double& w = params[p].values[i];
            const double saved = w;
            w = saved + h;
            const Evaluation up = evaluate(net, loss, input, target, options.l2_lambda, reference);
            w = saved - h;
            const Evaluation down = evaluate(net, loss, input, target, options.l2_lambda, reference);
            w = saved;
            double analytic = grad_views[p][i];
            if (params[p].regularized) analytic += options.l2_lambda * saved;
            record(up, down, analytic, params[p].name);
        }
    }

    if (options.check_input) {
        Tensor x = input;
        for (std::size_t i : entries_to_check(x.size(), options, rng)) {
            const double saved = x[i];
            x[i] = saved + h;
            const Evaluation up = evaluate(net, loss, x, target, options.l2_lambda, reference);
            x[i] = saved - h;
            const Evaluation down = evaluate(net, loss, x, target, options.l2_lambda, reference);
            x[i] = saved;
            record(up, down, grads.input_grad[i], "input");
        }
    }
    return report;
}

double grad_check(const Network& network, const LossFn& loss, const Tensor& input, const Tensor& target,
                  double h) {
    GradCheckOptions options;
    options.h = h;
    options.check_input = false;
    return grad_check(network, loss, input, target, options).max_rel_error;
}

}  // namespace sheepweight
