#include <cstdlib>
#include <stdexcept>
#include <string>

#include "countflow/kernels.hpp"

namespace countflow::kernels {

#ifdef COUNTFLOW_HAVE_AVX2
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(COUNTFLOW_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* env = std::getenv("COUNTFLOW_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return scalar_table();
    if (want == "avx2") {
      if (!isa_available(Isa::avx2)) {
        throw std::runtime_error("COUNTFLOW_KERNELS=avx2 but AVX2/FMA is unavailable");
      }
      return table(Isa::avx2);
    }
    if (want != "auto") throw std::runtime_error("COUNTFLOW_KERNELS must be scalar, avx2 or auto");
  }
  return isa_available(Isa::avx2) ? table(Isa::avx2) : scalar_table();
}

}  // namespace

bool isa_available(Isa isa) {
  if (isa == Isa::scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

const KernelTable& table(Isa isa) {
  if (!isa_available(isa)) throw std::runtime_error("requested kernel ISA is not available");
#ifdef COUNTFLOW_HAVE_AVX2
  if (isa == Isa::avx2) return avx2_table();
#endif
  return scalar_table();
}

const KernelTable& active() {
  static const KernelTable& t = select();
  return t;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace countflow::kernels
