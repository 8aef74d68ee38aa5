// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a CPUID check.

#include <immintrin.h>

#include <array>

#include "cdgnn/kernels.hpp"

namespace cdgnn::kernels::detail {
namespace {

template <class T>
struct Simd;

template <>
struct Simd<float> {
  using Reg = __m256;
  static constexpr std::size_t width = 8;
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg set1(float v) { return _mm256_set1_ps(v); }
  static Reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, Reg r) { _mm256_storeu_ps(p, r); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static Reg sub(Reg a, Reg b) { return _mm256_sub_ps(a, b); }
  static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static __m256i mask(std::size_t count) {
    alignas(32) std::array<int, 8> m{};
    for (std::size_t i = 0; i < count; ++i) m[i] = -1;
    return _mm256_load_si256(reinterpret_cast<const __m256i*>(m.data()));
  }
  static Reg maskload(const float* p, __m256i m) { return _mm256_maskload_ps(p, m); }
  static void maskstore(float* p, __m256i m, Reg r) { _mm256_maskstore_ps(p, m, r); }
  static float hsum(Reg r) {
    alignas(32) std::array<float, 8> v;
    _mm256_store_ps(v.data(), r);
    return ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]));
  }
};

template <>
struct Simd<double> {
  using Reg = __m256d;
  static constexpr std::size_t width = 4;
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg set1(double v) { return _mm256_set1_pd(v); }
  static Reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, Reg r) { _mm256_storeu_pd(p, r); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static Reg sub(Reg a, Reg b) { return _mm256_sub_pd(a, b); }
  static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static __m256i mask(std::size_t count) {
    alignas(32) std::array<long long, 4> m{};
    for (std::size_t i = 0; i < count; ++i) m[i] = -1;
    return _mm256_load_si256(reinterpret_cast<const __m256i*>(m.data()));
  }
  static Reg maskload(const double* p, __m256i m) { return _mm256_maskload_pd(p, m); }
  static void maskstore(double* p, __m256i m, Reg r) { _mm256_maskstore_pd(p, m, r); }
  static double hsum(Reg r) {
    alignas(32) std::array<double, 4> v;
    _mm256_store_pd(v.data(), r);
    return (v[0] + v[1]) + (v[2] + v[3]);
  }
};

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  using S = Simd<T>;
  constexpr std::size_t W = S::width;
  auto acc0 = S::zero();
  auto acc1 = S::zero();
  std::size_t i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    acc0 = S::fmadd(S::load(a + i), S::load(b + i), acc0);
    acc1 = S::fmadd(S::load(a + i + W), S::load(b + i + W), acc1);
  }
  for (; i + W <= n; i += W) acc0 = S::fmadd(S::load(a + i), S::load(b + i), acc0);
  if (i < n) {
    const auto m = S::mask(n - i);
    acc1 = S::fmadd(S::maskload(a + i, m), S::maskload(b + i, m), acc1);
  }
  return S::hsum(S::add(acc0, acc1));
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  using S = Simd<T>;
  constexpr std::size_t W = S::width;
  const auto va = S::set1(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W) S::store(y + i, S::fmadd(va, S::load(x + i), S::load(y + i)));
  if (i < n) {
    const auto m = S::mask(n - i);
    S::maskstore(y + i, m, S::fmadd(va, S::maskload(x + i, m), S::maskload(y + i, m)));
  }
}

template <class T>
T sq_dist(const T* a, const T* b, std::size_t n) {
  using S = Simd<T>;
  constexpr std::size_t W = S::width;
  auto acc = S::zero();
  std::size_t i = 0;
  for (; i + W <= n; i += W) {
    const auto t = S::sub(S::load(a + i), S::load(b + i));
    acc = S::fmadd(t, t, acc);
  }
  if (i < n) {
    const auto m = S::mask(n - i);
    const auto t = S::sub(S::maskload(a + i, m), S::maskload(b + i, m));
    acc = S::fmadd(t, t, acc);
  }
  return S::hsum(acc);
}

template <class T>
void spmm(const std::int64_t* row_ptr, const std::int32_t* cols, std::size_t rows, const T* x,
          std::size_t d, T* y) {
  using S = Simd<T>;
  constexpr std::size_t W = S::width;
  const std::size_t full = d / W * W;
  const bool has_tail = full < d;
  const auto tail = S::mask(d - full);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::int64_t begin = row_ptr[i];
    const std::int64_t end = row_ptr[i + 1];
    T* out = y + i * d;
    for (std::size_t c = 0; c < full; c += W) {
      auto acc = S::zero();
      for (std::int64_t p = begin; p < end; ++p)
        acc = S::add(acc, S::load(x + static_cast<std::size_t>(cols[p]) * d + c));
      S::store(out + c, acc);
    }
    if (has_tail) {
      auto acc = S::zero();
      for (std::int64_t p = begin; p < end; ++p)
        acc = S::add(acc, S::maskload(x + static_cast<std::size_t>(cols[p]) * d + full, tail));
      S::maskstore(out + full, tail, acc);
    }
  }
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T v = dot(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* out = c + i * n;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j) out[j] = 0;
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, out, n);
  }
}

template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  if (!accumulate)
    for (std::size_t j = 0; j < k * n; ++j) c[j] = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + i * n, c + p * n, n);
}

template <class T>
const KernelTable<T> kTable{Isa::avx2, &dot<T>,     &axpy<T>,    &sq_dist<T>,
                            &spmm<T>,  &gemm_nt<T>, &gemm_nn<T>, &gemm_tn<T>};

}  // namespace

template <class T>
const KernelTable<T>& avx2_table() {
  return kTable<T>;
}

template const KernelTable<float>& avx2_table<float>();
template const KernelTable<double>& avx2_table<double>();

}  // namespace cdgnn::kernels::detail
