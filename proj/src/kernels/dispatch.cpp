#include "sheepweight/errors.hpp"
#include "sheepweight/kernels.hpp"

#include <cstdlib>
#include <string>

namespace sheepweight::kernels {
namespace {

constexpr KernelTable kScalar{Isa::scalar, detail::axpy_scalar, detail::dot_scalar,
                              detail::adam_update_scalar};
#if defined(SHEEPWEIGHT_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, detail::axpy_avx2, detail::dot_avx2, detail::adam_update_avx2};
#endif
#if defined(SHEEPWEIGHT_HAVE_NEON)
constexpr KernelTable kNeon{Isa::neon, detail::axpy_neon, detail::dot_neon, detail::adam_update_neon};
#endif

bool cpu_supports(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(SHEEPWEIGHT_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(SHEEPWEIGHT_HAVE_NEON)
            return true;  // mandatory on AArch64
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& select_default() {
    if (const char* forced = std::getenv("SHEEPWEIGHT_SIMD")) {
        const std::string name(forced);
        if (name == "scalar") return table_for(Isa::scalar);
        if (name == "avx2") return table_for(Isa::avx2);
        if (name == "neon") return table_for(Isa::neon);
        throw ValidationError("SHEEPWEIGHT_SIMD must be scalar, avx2 or neon, got '" + name + "'");
    }
    const auto isas = available_isas();
    return table_for(isas.back());
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

const KernelTable& table_for(Isa isa) {
    if (!cpu_supports(isa)) {
        throw ValidationError("kernel variant '" + std::string(isa_name(isa)) +
                              "' is not available in this build or on this CPU");
    }
    switch (isa) {
        case Isa::scalar: return kScalar;
#if defined(SHEEPWEIGHT_HAVE_AVX2)
        case Isa::avx2: return kAvx2;
#endif
#if defined(SHEEPWEIGHT_HAVE_NEON)
        case Isa::neon: return kNeon;
#endif
        default: break;
    }
    return kScalar;
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out{Isa::scalar};
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        if (cpu_supports(isa)) out.push_back(isa);
    }
    return out;
}

const KernelTable& active() {
    static const KernelTable& table = select_default();
    return table;
}

}  // namespace sheepweight::kernels
