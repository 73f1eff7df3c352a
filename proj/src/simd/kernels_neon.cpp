// NEON variants for AArch64, where Advanced SIMD is part of the base ISA.
#include <arm_neon.h>

#include <bit>

#include "kernels_internal.hpp"

namespace geocorr::simd {

namespace {

void cap_membership(double u, double v, double threshold, const double* cos_t, const double* sin_t,
                    std::size_t count, std::uint8_t* out) {
    const float64x2_t uu = vdupq_n_f64(u);
    const float64x2_t vv = vdupq_n_f64(v);
    const float64x2_t tt = vdupq_n_f64(threshold);
    std::size_t j = 0;
    for (; j + 2 <= count; j += 2) {
        const float64x2_t a = vmulq_f64(uu, vld1q_f64(cos_t + j));
        const float64x2_t b = vmulq_f64(vv, vld1q_f64(sin_t + j));
        const uint64x2_t ge = vcgeq_f64(vaddq_f64(a, b), tt);
        out[j] = static_cast<std::uint8_t>(vgetq_lane_u64(ge, 0) & 1);
        out[j + 1] = static_cast<std::uint8_t>(vgetq_lane_u64(ge, 1) & 1);
    }
    for (; j < count; ++j) {
        const double a = u * cos_t[j];
        const double b = v * sin_t[j];
        out[j] = (a + b >= threshold) ? 1 : 0;
    }
}

void mask_and(std::uint8_t* acc, const std::uint8_t* other, std::size_t count) {
    std::size_t j = 0;
    for (; j + 16 <= count; j += 16) vst1q_u8(acc + j, vandq_u8(vld1q_u8(acc + j), vld1q_u8(other + j)));
    for (; j < count; ++j) acc[j] &= other[j];
}

void mask_or(std::uint8_t* acc, const std::uint8_t* other, std::size_t count) {
    std::size_t j = 0;
    for (; j + 16 <= count; j += 16) vst1q_u8(acc + j, vorrq_u8(vld1q_u8(acc + j), vld1q_u8(other + j)));
    for (; j < count; ++j) acc[j] |= other[j];
}

void mask_not(std::uint8_t* acc, std::size_t count) {
    const uint8x16_t ones = vdupq_n_u8(1);
    std::size_t j = 0;
    for (; j + 16 <= count; j += 16) vst1q_u8(acc + j, veorq_u8(vld1q_u8(acc + j), ones));
    for (; j < count; ++j) acc[j] ^= 1;
}

void pack_bits(const std::uint8_t* mask, std::size_t count, std::uint64_t* words) {
    const std::size_t nwords = (count + 63) / 64;
    // Weights 1, 2, 4, ... 128 per byte lane; a horizontal add then forms one byte of bits.
    const uint8x8_t weights = {1, 2, 4, 8, 16, 32, 64, 128};
    std::size_t w = 0;
    for (; (w + 1) * 64 <= count; ++w) {
        std::uint64_t bits = 0;
        for (unsigned part = 0; part < 8; ++part) {
            const uint8x8_t lanes = vand_u8(vld1_u8(mask + 64 * w + 8 * part), vdup_n_u8(1));
            const std::uint64_t byte = vaddv_u8(vmul_u8(lanes, weights));
            bits |= byte << (8 * part);
        }
        words[w] = bits;
    }
    for (; w < nwords; ++w) {
        std::uint64_t bits = 0;
        for (std::size_t j = 64 * w; j < count; ++j)
            bits |= static_cast<std::uint64_t>(mask[j] & 1) << (j & 63);
        words[w] = bits;
    }
}

inline uint64x2_t load_words(const std::uint64_t* p) {
    return vreinterpretq_u64_u8(vld1q_u8(reinterpret_cast<const std::uint8_t*>(p)));
}

void cyclic_overlap(const std::uint64_t* doubled, std::size_t period, std::size_t shifts,
                    std::uint32_t* and_counts, std::uint32_t* xor_counts) {
    const std::size_t nwords = (period + 63) / 64;
    const std::size_t tail = period & 63;
    const std::uint64_t last_mask = tail ? ((std::uint64_t{1} << tail) - 1) : ~std::uint64_t{0};
    for (std::size_t k = 0; k < shifts; ++k) {
        const std::size_t q = k >> 6;
        const int s = static_cast<int>(k & 63);
        // vshlq with a negative count shifts right; a count of +/-64 yields zero.
        const int64x2_t right = vdupq_n_s64(-s);
        const int64x2_t left = vdupq_n_s64(64 - s);
        uint64x2_t both = vdupq_n_u64(0);
        uint64x2_t diff = vdupq_n_u64(0);
        std::size_t i = 0;
        for (; i + 2 < nwords; i += 2) {
            const uint64x2_t base = load_words(doubled + i);
            const uint64x2_t lo = load_words(doubled + q + i);
            const uint64x2_t hi = load_words(doubled + q + i + 1);
            const uint64x2_t shifted = vorrq_u64(vshlq_u64(lo, right), vshlq_u64(hi, left));
            both = vpadalq_u32(both, vpaddlq_u16(vpaddlq_u8(vcntq_u8(vreinterpretq_u8_u64(vandq_u64(base, shifted))))));
            diff = vpadalq_u32(diff, vpaddlq_u16(vpaddlq_u8(vcntq_u8(vreinterpretq_u8_u64(veorq_u64(base, shifted))))));
        }
        std::uint64_t both_sum = vgetq_lane_u64(both, 0) + vgetq_lane_u64(both, 1);
        std::uint64_t diff_sum = vgetq_lane_u64(diff, 0) + vgetq_lane_u64(diff, 1);
        for (; i < nwords; ++i) {
            const std::uint64_t lo = doubled[q + i];
            const std::uint64_t shifted = s ? (lo >> s) | (doubled[q + i + 1] << (64 - s)) : lo;
            const std::uint64_t mask = (i + 1 == nwords) ? last_mask : ~std::uint64_t{0};
            both_sum += static_cast<std::uint64_t>(std::popcount(doubled[i] & shifted & mask));
            diff_sum += static_cast<std::uint64_t>(std::popcount((doubled[i] ^ shifted) & mask));
        }
        and_counts[k] = static_cast<std::uint32_t>(both_sum);
        xor_counts[k] = static_cast<std::uint32_t>(diff_sum);
    }
}

const KernelTable kNeon{Isa::neon, cap_membership, mask_and,      mask_or,
                        mask_not,  pack_bits,      cyclic_overlap};

}  // namespace

namespace detail {
const KernelTable* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace geocorr::simd
