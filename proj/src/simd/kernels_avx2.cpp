// AVX2 variants. This translation unit alone is compiled with -mavx2 -mpopcnt; nothing here
// may be called before dispatch has confirmed CPU support.
#include <immintrin.h>

#include <bit>
#include <cstring>

#include "kernels_internal.hpp"

namespace geocorr::simd {

namespace {

// Byte expansion of a 4-bit movemask: lane b of the result is bit b of the index.
constexpr std::uint32_t kNibbleBytes[16] = {
    0x00000000u, 0x00000001u, 0x00000100u, 0x00000101u, 0x00010000u, 0x00010001u,
    0x00010100u, 0x00010101u, 0x01000000u, 0x01000001u, 0x01000100u, 0x01000101u,
    0x01010000u, 0x01010001u, 0x01010100u, 0x01010101u};

void cap_membership(double u, double v, double threshold, const double* cos_t, const double* sin_t,
                    std::size_t count, std::uint8_t* out) {
    const __m256d uu = _mm256_set1_pd(u);
    const __m256d vv = _mm256_set1_pd(v);
    const __m256d tt = _mm256_set1_pd(threshold);
    std::size_t j = 0;
    for (; j + 4 <= count; j += 4) {
        const __m256d a = _mm256_mul_pd(uu, _mm256_loadu_pd(cos_t + j));
        const __m256d b = _mm256_mul_pd(vv, _mm256_loadu_pd(sin_t + j));
        const __m256d ge = _mm256_cmp_pd(_mm256_add_pd(a, b), tt, _CMP_GE_OQ);
        const std::uint32_t bytes = kNibbleBytes[_mm256_movemask_pd(ge)];
        std::memcpy(out + j, &bytes, 4);
    }
    for (; j < count; ++j) {
        const double a = u * cos_t[j];
        const double b = v * sin_t[j];
        out[j] = (a + b >= threshold) ? 1 : 0;
    }
}

void mask_and(std::uint8_t* acc, const std::uint8_t* other, std::size_t count) {
    std::size_t j = 0;
    for (; j + 32 <= count; j += 32) {
        const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(acc + j));
        const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(other + j));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(acc + j), _mm256_and_si256(a, b));
    }
    for (; j < count; ++j) acc[j] &= other[j];
}

void mask_or(std::uint8_t* acc, const std::uint8_t* other, std::size_t count) {
    std::size_t j = 0;
    for (; j + 32 <= count; j += 32) {
        const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(acc + j));
        const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(other + j));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(acc + j), _mm256_or_si256(a, b));
    }
    for (; j < count; ++j) acc[j] |= other[j];
}

void mask_not(std::uint8_t* acc, std::size_t count) {
    const __m256i ones = _mm256_set1_epi8(1);
    std::size_t j = 0;
    for (; j + 32 <= count; j += 32) {
        const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(acc + j));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(acc + j), _mm256_xor_si256(a, ones));
    }
    for (; j < count; ++j) acc[j] ^= 1;
}

void pack_bits(const std::uint8_t* mask, std::size_t count, std::uint64_t* words) {
    const std::size_t nwords = (count + 63) / 64;
    const __m256i zero = _mm256_setzero_si256();
    std::size_t w = 0;
    for (; (w + 1) * 64 <= count; ++w) {
        const __m256i lo = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + 64 * w));
        const __m256i hi = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + 64 * w + 32));
        // Bytes are 0 or 1, so "not equal to zero" is the bit.
        const auto lo_bits = static_cast<std::uint32_t>(
            ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(lo, zero))));
        const auto hi_bits = static_cast<std::uint32_t>(
            ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(hi, zero))));
        words[w] = static_cast<std::uint64_t>(lo_bits) | (static_cast<std::uint64_t>(hi_bits) << 32);
    }
    for (; w < nwords; ++w) {
        std::uint64_t bits = 0;
        for (std::size_t j = 64 * w; j < count; ++j)
            bits |= static_cast<std::uint64_t>(mask[j] & 1) << (j & 63);
        words[w] = bits;
    }
}

inline __m256i popcount_bytes(__m256i v) {
    const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                            0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low = _mm256_set1_epi8(0x0f);
    const __m256i lo = _mm256_shuffle_epi8(lookup, _mm256_and_si256(v, low));
    const __m256i hi = _mm256_shuffle_epi8(lookup, _mm256_and_si256(_mm256_srli_epi16(v, 4), low));
    return _mm256_add_epi8(lo, hi);
}

inline std::uint64_t horizontal_sum(__m256i v) {
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

void cyclic_overlap(const std::uint64_t* doubled, std::size_t period, std::size_t shifts,
                    std::uint32_t* and_counts, std::uint32_t* xor_counts) {
    const std::size_t nwords = (period + 63) / 64;
    const std::size_t tail = period & 63;
    const std::uint64_t last_mask = tail ? ((std::uint64_t{1} << tail) - 1) : ~std::uint64_t{0};
    const std::size_t full_blocks = nwords / 4;
    const std::size_t rest = nwords - 4 * full_blocks;

    // Lane masks for the final partial block (or the final full block when rest == 0).
    alignas(32) std::uint64_t final_mask[4] = {0, 0, 0, 0};
    const std::size_t final_block = rest ? full_blocks : full_blocks - 1;
    for (std::size_t l = 0; l < 4; ++l) {
        const std::size_t word = 4 * final_block + l;
        if (word < nwords) final_mask[l] = (word + 1 == nwords) ? last_mask : ~std::uint64_t{0};
    }
    const __m256i tail_mask = _mm256_load_si256(reinterpret_cast<const __m256i*>(final_mask));
    const std::size_t blocks = rest ? full_blocks + 1 : full_blocks;
    const __m256i zero = _mm256_setzero_si256();

    // Words past the end of the doubled buffer are never selected by tail_mask, but the loads
    // themselves must stay in bounds, so the last block is staged through a padded copy.
    for (std::size_t k = 0; k < shifts; ++k) {
        const std::size_t q = k >> 6;
        const unsigned s = static_cast<unsigned>(k & 63);
        const __m256i right = _mm256_set1_epi64x(s);
        const __m256i left = _mm256_set1_epi64x(64 - s);
        __m256i both = zero;
        __m256i diff = zero;
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::size_t i = 4 * b;
            __m256i base;
            __m256i lo;
            __m256i hi;
            if (b + 1 < blocks) {
                base = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(doubled + i));
                lo = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(doubled + q + i));
                hi = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(doubled + q + i + 1));
            } else {
                alignas(32) std::uint64_t sb[4] = {0, 0, 0, 0};
                alignas(32) std::uint64_t sl[4] = {0, 0, 0, 0};
                alignas(32) std::uint64_t sh[4] = {0, 0, 0, 0};
                for (std::size_t l = 0; l < 4 && i + l < nwords; ++l) {
                    sb[l] = doubled[i + l];
                    sl[l] = doubled[q + i + l];
                    sh[l] = doubled[q + i + l + 1];
                }
                base = _mm256_load_si256(reinterpret_cast<const __m256i*>(sb));
                lo = _mm256_load_si256(reinterpret_cast<const __m256i*>(sl));
                hi = _mm256_load_si256(reinterpret_cast<const __m256i*>(sh));
            }
            // A variable shift by 64 yields zero, which handles s == 0 without a branch.
            const __m256i shifted =
                _mm256_or_si256(_mm256_srlv_epi64(lo, right), _mm256_sllv_epi64(hi, left));
            __m256i x_and = _mm256_and_si256(base, shifted);
            __m256i x_xor = _mm256_xor_si256(base, shifted);
            if (b + 1 == blocks) {
                x_and = _mm256_and_si256(x_and, tail_mask);
                x_xor = _mm256_and_si256(x_xor, tail_mask);
            }
            both = _mm256_add_epi64(both, _mm256_sad_epu8(popcount_bytes(x_and), zero));
            diff = _mm256_add_epi64(diff, _mm256_sad_epu8(popcount_bytes(x_xor), zero));
        }
        and_counts[k] = static_cast<std::uint32_t>(horizontal_sum(both));
        xor_counts[k] = static_cast<std::uint32_t>(horizontal_sum(diff));
    }
}

const KernelTable kAvx2{Isa::avx2, cap_membership, mask_and,      mask_or,
                        mask_not,  pack_bits,      cyclic_overlap};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace geocorr::simd
