#pragma once

// Data-parallel inner loops shared by the graph operators, the eigensolvers
// and the differentiable layers. Each kernel has a scalar reference version
// and an AVX2+FMA version; one table is picked at first use from CPUID and
// the CDGNN_SIMD environment variable ("scalar" or "avx2").
//
// Reduction order is fixed per table: rows in ascending order, CSR
// neighbours in stored (sorted) order, SIMD lanes combined left to right.
// Results are therefore bit-reproducible for a given table, and agree across
// tables up to floating-point reassociation.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace cdgnn::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

template <class T>
struct KernelTable {
  Isa isa;

  /// sum_i a[i] * b[i]
  T (*dot)(const T* a, const T* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  /// sum_i (a[i] - b[i])^2
  T (*sq_dist)(const T* a, const T* b, std::size_t n);

  /// Binary CSR times dense: y[i,:] = sum_{p in row i} x[cols[p], :].
  /// x and y are row-major with d columns; y is overwritten.
  void (*spmm)(const std::int64_t* row_ptr, const std::int32_t* cols, std::size_t rows,
               const T* x, std::size_t d, T* y);

  /// c (m x n) (+)= a (m x k) * b^T, with b stored n x k.
  void (*gemm_nt)(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
  /// c (m x n) (+)= a (m x k) * b (k x n).
  void (*gemm_nn)(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
  /// c (k x n) (+)= a^T * b, with a stored m x k and b stored m x n.
  void (*gemm_tn)(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
};

/// Table chosen for this process (CPU detection + CDGNN_SIMD override).
template <class T>
const KernelTable<T>& active();

/// A specific table; throws std::runtime_error if the CPU lacks the ISA.
template <class T>
const KernelTable<T>& table(Isa isa);

bool cpu_supports(Isa isa) noexcept;
Isa active_isa() noexcept;

namespace detail {
template <class T>
const KernelTable<T>& scalar_table();
template <class T>
const KernelTable<T>& avx2_table();
}  // namespace detail

}  // namespace cdgnn::kernels
