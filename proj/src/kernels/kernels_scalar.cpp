#include "cdgnn/kernels.hpp"

namespace cdgnn::kernels::detail {
namespace {

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
T sq_dist(const T* a, const T* b, std::size_t n) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

template <class T>
void spmm(const std::int64_t* row_ptr, const std::int32_t* cols, std::size_t rows, const T* x,
          std::size_t d, T* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    T* out = y + i * d;
    for (std::size_t c = 0; c < d; ++c) out[c] = 0;
    for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      const T* in = x + static_cast<std::size_t>(cols[p]) * d;
      for (std::size_t c = 0; c < d; ++c) out[c] += in[c];
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
const KernelTable<T> kTable{Isa::scalar, &dot<T>,     &axpy<T>,    &sq_dist<T>,
                            &spmm<T>,    &gemm_nt<T>, &gemm_nn<T>, &gemm_tn<T>};

}  // namespace

template <class T>
const KernelTable<T>& scalar_table() {
  return kTable<T>;
}

template const KernelTable<float>& scalar_table<float>();
template const KernelTable<double>& scalar_table<double>();

}  // namespace cdgnn::kernels::detail
