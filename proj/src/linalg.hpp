#pragma once

#include <cstddef>

namespace permnet::detail {

// C[m,n] += A[m,k] * B[k,n]. Zero entries of A are skipped, which pays off
// for 0/1 permission rows and ReLU outputs.
inline void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                     std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
inline void gemm_at_b_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                          std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

// C[m,k] += A[m,n] * B[k,n]^T
inline void gemm_a_bt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                          std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
      ci[p] += s;
    }
  }
}

}  // namespace permnet::detail
