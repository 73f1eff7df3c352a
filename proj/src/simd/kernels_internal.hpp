#pragma once

#include <geocorr/simd.hpp>

namespace geocorr::simd::detail {

const KernelTable* avx2_table();
const KernelTable* neon_table();

}  // namespace geocorr::simd::detail
