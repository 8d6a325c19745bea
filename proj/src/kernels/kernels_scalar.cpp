#include "sheepweight/kernels.hpp"

#include <cmath>

namespace sheepweight::kernels::detail {

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void adam_update_scalar(const AdamCoefficients& c, const double* grad, double* theta, double* m,
                        double* v, std::size_t n) {
    const double one_minus_b1 = 1.0 - c.beta1;
    const double one_minus_b2 = 1.0 - c.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i] + c.l2_lambda * theta[i];
        m[i] = c.beta1 * m[i] + one_minus_b1 * g;
        v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
        const double m_hat = m[i] / c.bias_correction1;
        const double v_hat = v[i] / c.bias_correction2;
        theta[i] -= (c.lr * m_hat) / (std::sqrt(v_hat) + c.eps);
    }
}

}  // namespace sheepweight::kernels::detail
