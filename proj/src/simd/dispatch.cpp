#include <cstdlib>
#include <string_view>

#include "kernels.hpp"

namespace eclaire::simd {
namespace {

#if defined(ECLAIRE_HAVE_AVX2)
bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable& select_kernels() {
  const char* forced = std::getenv("ECLAIRE_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
  auto variants = available_kernels();
  return *variants.back();
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(ECLAIRE_HAVE_AVX2)
  if (cpu_has_avx2()) out.push_back(&detail::avx2_kernels());
#endif
#if defined(ECLAIRE_HAVE_NEON)
  out.push_back(&detail::neon_kernels());
#endif
  return out;
}

const KernelTable& active() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace eclaire::simd
