#pragma once

#include <cstddef>

// Row-major GEMM variants used by the autodiff engine.
//
//   gemm_nn: C (+)= A   * B    A: m x k, B: k x n
//   gemm_nt: C (+)= A   * B^T  A: m x k, B: n x k
//   gemm_tn: C (+)= A^T * B    A: k x m, B: k x n
//
// `accumulate == false` overwrites C. The production kernels parallelise over
// rows of C with OpenMP; every output element is reduced in the same order
// regardless of the thread count, so results are bitwise independent of it.
// The `reference` namespace holds naive triple loops used only to check the
// production kernels.
namespace climrl::nn::kernels {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);

// Work (m*k*n) below which kernels never open a parallel region.
inline constexpr std::size_t kParallelThreshold = 1u << 18;

namespace reference {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);

}  // namespace reference

}  // namespace climrl::nn::kernels
