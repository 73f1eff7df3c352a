#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace geocorr::simd {

namespace detail {
#ifndef GEOCORR_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef GEOCORR_HAVE_NEON
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(GEOCORR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
#else
    return false;
#endif
}

const KernelTable* table_if_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return &scalar_kernels();
        case Isa::avx2:
            return cpu_has_avx2() ? detail::avx2_table() : nullptr;
        case Isa::neon:
            return detail::neon_table();
    }
    return nullptr;
}

const KernelTable* detect() {
    if (const char* env = std::getenv("GEOCORR_SIMD"); env != nullptr && *env != '\0') {
        const std::string_view requested(env);
        if (requested != "auto") return &kernels_for(parse_isa(requested));
    }
    for (Isa isa : {Isa::avx2, Isa::neon})
        if (const KernelTable* t = table_if_supported(isa)) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

bool isa_supported(Isa isa) { return table_if_supported(isa) != nullptr; }

const KernelTable& kernels_for(Isa isa) {
    if (const KernelTable* t = table_if_supported(isa)) return *t;
    throw std::runtime_error("instruction set '" + std::string(isa_name(isa)) +
                             "' is not available on this machine or build");
}

const KernelTable& kernels() {
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    if (t == nullptr) {
        const KernelTable* chosen = detect();
        g_active.compare_exchange_strong(t, chosen, std::memory_order_acq_rel);
        t = g_active.load(std::memory_order_acquire);
    }
    return *t;
}

Isa active_isa() { return kernels().isa; }

void set_active_isa(Isa isa) { g_active.store(&kernels_for(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    if (name == "neon") return Isa::neon;
    throw std::invalid_argument("unknown instruction set '" + std::string(name) +
                                "' (expected scalar, avx2, neon or auto)");
}

}  // namespace geocorr::simd
