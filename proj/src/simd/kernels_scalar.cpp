#include <bit>

#include "kernels_internal.hpp"

namespace geocorr::simd {

namespace {

void cap_membership(double u, double v, double threshold, const double* cos_t, const double* sin_t,
                    std::size_t count, std::uint8_t* out) {
    for (std::size_t j = 0; j < count; ++j) {
        const double a = u * cos_t[j];
        const double b = v * sin_t[j];
        out[j] = (a + b >= threshold) ? 1 : 0;
    }
}

void mask_and(std::uint8_t* acc, const std::uint8_t* other, std::size_t count) {
    for (std::size_t j = 0; j < count; ++j) acc[j] &= other[j];
}

void mask_or(std::uint8_t* acc, const std::uint8_t* other, std::size_t count) {
    for (std::size_t j = 0; j < count; ++j) acc[j] |= other[j];
}

void mask_not(std::uint8_t* acc, std::size_t count) {
    for (std::size_t j = 0; j < count; ++j) acc[j] ^= 1;
}

void pack_bits(const std::uint8_t* mask, std::size_t count, std::uint64_t* words) {
    const std::size_t nwords = (count + 63) / 64;
    for (std::size_t i = 0; i < nwords; ++i) words[i] = 0;
    for (std::size_t j = 0; j < count; ++j)
        words[j >> 6] |= static_cast<std::uint64_t>(mask[j] & 1) << (j & 63);
}

void cyclic_overlap(const std::uint64_t* doubled, std::size_t period, std::size_t shifts,
                    std::uint32_t* and_counts, std::uint32_t* xor_counts) {
    const std::size_t nwords = (period + 63) / 64;
    const std::size_t tail = period & 63;
    const std::uint64_t last_mask = tail ? ((std::uint64_t{1} << tail) - 1) : ~std::uint64_t{0};
    for (std::size_t k = 0; k < shifts; ++k) {
        const std::size_t q = k >> 6;
        const unsigned s = static_cast<unsigned>(k & 63);
        std::uint32_t both = 0;
        std::uint32_t diff = 0;
        for (std::size_t i = 0; i < nwords; ++i) {
            const std::uint64_t lo = doubled[q + i];
            const std::uint64_t shifted = s ? (lo >> s) | (doubled[q + i + 1] << (64 - s)) : lo;
            const std::uint64_t mask = (i + 1 == nwords) ? last_mask : ~std::uint64_t{0};
            const std::uint64_t base = doubled[i];
            both += static_cast<std::uint32_t>(std::popcount(base & shifted & mask));
            diff += static_cast<std::uint32_t>(std::popcount((base ^ shifted) & mask));
        }
        and_counts[k] = both;
        xor_counts[k] = diff;
    }
}

const KernelTable kScalar{Isa::scalar, cap_membership, mask_and,      mask_or,
                          mask_not,    pack_bits,      cyclic_overlap};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace geocorr::simd
