#pragma once

#include "eclaire/simd.hpp"

namespace eclaire::simd::detail {

#if defined(ECLAIRE_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(ECLAIRE_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

}  // namespace eclaire::simd::detail
