// Runtime backend selection. The AVX2 translation unit is compiled with
// -mavx2 -mfma, so its code must not execute on CPUs without those features;
// the checks below gate every path to it. DIFFSETLAB_FORCE_SCALAR=1 pins the
// scalar reference backend, which the equivalence tests rely on.

#include "diffsetlab/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace dsl::kern {

#if defined(DSL_HAVE_AVX2_TU) && defined(__x86_64__)
const Backend* avx2_backend_impl();
#endif

const Backend* avx2_backend() {
#if defined(DSL_HAVE_AVX2_TU) && defined(__x86_64__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return avx2_backend_impl();
#endif
  return nullptr;
}

const Backend& active_backend() {
  static const Backend* chosen = [] {
    const char* force = std::getenv("DIFFSETLAB_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "1") == 0) return &scalar_backend();
    const Backend* v = avx2_backend();
    return v != nullptr ? v : &scalar_backend();
  }();
  return *chosen;
}

}  // namespace dsl::kern
