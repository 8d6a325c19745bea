#pragma once

// Data-parallel inner loops used by the layers and the optimizer.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, a SIMD variant. The variant is chosen once per process from the
// CPU's capabilities (overridable with SHEEPWEIGHT_SIMD=scalar|avx2|neon).
// axpy and adam_update perform exactly the same IEEE operations in every
// variant and are bitwise identical across them; dot reassociates its sum
// and agrees with the scalar reference to rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace sheepweight::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct AdamCoefficients {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double l2_lambda;       // already zero for unregularized parameters
    double bias_correction1; // 1 - beta1^t
    double bias_correction2; // 1 - beta2^t
};

struct KernelTable {
    Isa isa;
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // One Adam update over n parameters, in place on theta, m and v.
    void (*adam_update)(const AdamCoefficients& c, const double* grad, double* theta, double* m,
                        double* v, std::size_t n);
};

/// Kernel set for a specific ISA; throws ValidationError if it was not built
/// or the CPU cannot run it.
const KernelTable& table_for(Isa isa);

/// ISAs that were compiled in and that this CPU supports, scalar first.
std::vector<Isa> available_isas();

/// Process-wide active table (selected on first use).
const KernelTable& active();

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}

namespace detail {
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
double dot_scalar(const double* x, const double* y, std::size_t n);
void adam_update_scalar(const AdamCoefficients& c, const double* grad, double* theta, double* m,
                        double* v, std::size_t n);
#if defined(SHEEPWEIGHT_HAVE_AVX2)
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
double dot_avx2(const double* x, const double* y, std::size_t n);
void adam_update_avx2(const AdamCoefficients& c, const double* grad, double* theta, double* m,
                      double* v, std::size_t n);
#endif
#if defined(SHEEPWEIGHT_HAVE_NEON)
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
double dot_neon(const double* x, const double* y, std::size_t n);
void adam_update_neon(const AdamCoefficients& c, const double* grad, double* theta, double* m,
                      double* v, std::size_t n);
#endif
}  // namespace detail

}  // namespace sheepweight::kernels
