#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cdgnn/kernels.hpp"

namespace cdgnn::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(CDGNN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa pick_isa() {
  if (const char* env = std::getenv("CDGNN_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && cpu_supports(Isa::avx2)) return Isa::avx2;
  }
  return cpu_supports(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa() noexcept {
  static const Isa isa = pick_isa();
  return isa;
}

template <class T>
const KernelTable<T>& table(Isa isa) {
  if (!cpu_supports(isa)) {
    throw std::runtime_error("kernel ISA not supported on this CPU: " +
                             std::string(isa_name(isa)));
  }
#if defined(CDGNN_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::avx2_table<T>();
#endif
  return detail::scalar_table<T>();
}

template <class T>
const KernelTable<T>& active() {
  static const KernelTable<T>& t = table<T>(active_isa());
  return t;
}

template const KernelTable<float>& table<float>(Isa);
template const KernelTable<double>& table<double>(Isa);
template const KernelTable<float>& active<float>();
template const KernelTable<double>& active<double>();

}  // namespace cdgnn::kernels
