#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace geocorr::simd {

enum class Isa { scalar, avx2, neon };

/// Inner loops of the orbit estimators. Every variant produces output bit-identical to the
/// scalar reference; the floating-point kernels use separate multiply and add (no FMA).
struct KernelTable {
    Isa isa;

    /// out[j] = (u * cos_t[j] + v * sin_t[j] >= threshold) ? 1 : 0.
    void (*cap_membership)(double u, double v, double threshold, const double* cos_t,
                           const double* sin_t, std::size_t count, std::uint8_t* out);

    /// In-place Boolean algebra on 0/1 byte masks.
    void (*mask_and)(std::uint8_t* acc, const std::uint8_t* other, std::size_t count);
    void (*mask_or)(std::uint8_t* acc, const std::uint8_t* other, std::size_t count);
    void (*mask_not)(std::uint8_t* acc, std::size_t count);

    /// Packs a 0/1 byte mask into little-endian 64-bit words. Unused high bits of the final
    /// word are cleared.
    void (*pack_bits)(const std::uint8_t* mask, std::size_t count, std::uint64_t* words);

    /// Cyclic overlap counts of a bit sequence b of length `period`:
    ///   and_counts[k] = sum_j b[j] & b[(j + k) mod period]
    ///   xor_counts[k] = sum_j b[j] ^ b[(j + k) mod period]
    /// for k in [0, shifts), shifts <= period. `doubled` holds b twice in a row and must be
    /// readable for cyclic_words(period) words.
    void (*cyclic_overlap)(const std::uint64_t* doubled, std::size_t period, std::size_t shifts,
                           std::uint32_t* and_counts, std::uint32_t* xor_counts);
};

/// Words needed by the `doubled` buffer of cyclic_overlap.
constexpr std::size_t cyclic_words(std::size_t period) { return 2 * ((period + 63) / 64) + 2; }

const KernelTable& scalar_kernels();

/// Kernels for a specific instruction set; throws std::runtime_error if the CPU or build
/// lacks it.
const KernelTable& kernels_for(Isa isa);

/// Kernels in use. Chosen on first call from CPU detection, overridable with the
/// GEOCORR_SIMD environment variable (scalar, avx2, neon, auto) or set_active_isa.
const KernelTable& kernels();

bool isa_supported(Isa isa);
Isa active_isa();
void set_active_isa(Isa isa);
std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

}  // namespace geocorr::simd
