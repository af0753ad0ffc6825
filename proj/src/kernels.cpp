#include "climrl/nn/kernels.hpp"

#include <algorithm>

namespace climrl::nn::kernels {

namespace {

inline bool go_parallel(std::size_t m, std::size_t k, std::size_t n) {
  return m > 1 && m * k * n >= kParallelThreshold;
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (go_parallel(m, k, n))
  for (long i = 0; i < rows; ++i) {
    double* c_row = c + static_cast<std::size_t>(i) * n;
    const double* a_row = a + static_cast<std::size_t>(i) * k;
    if (!accumulate) std::fill(c_row, c_row + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a_row[p];
      const double* b_row = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) c_row[j] += aip * b_row[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (go_parallel(m, k, n))
  for (long i = 0; i < rows; ++i) {
    double* c_row = c + static_cast<std::size_t>(i) * n;
    const double* a_row = a + static_cast<std::size_t>(i) * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* b_row = b + j * k;
      double sum = 0.0;
#pragma omp simd reduction(+ : sum)
      for (std::size_t p = 0; p < k; ++p) sum += a_row[p] * b_row[p];
      c_row[j] = accumulate ? c_row[j] + sum : sum;
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  // Each thread owns whole rows of C (columns of A), keeping the reduction
  // over k in a fixed order.
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static) if (go_parallel(m, k, n))
  for (long i = 0; i < rows; ++i) {
    double* c_row = c + static_cast<std::size_t>(i) * n;
    if (!accumulate) std::fill(c_row, c_row + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + static_cast<std::size_t>(i)];
      if (api == 0.0) continue;
      const double* b_row = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) c_row[j] += api * b_row[j];
    }
  }
}

namespace reference {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[j * k + p];
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < k; ++p) sum += a[p * m + i] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

}  // namespace reference

}  // namespace climrl::nn::kernels
