#pragma once

#include <cstddef>

// Plain loop GEMM kernels used by the graph ops. All of them accumulate into C.
namespace leo::num::kernels {

// C(n x m) += A(n x k) * B(k x m)
inline void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c,
                    std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// C(n x m) += A(n x k) * B(m x k)^T
inline void gemm_nt(const double* __restrict a, const double* __restrict b, double* __restrict c,
                    std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * m + j] += s;
    }
  }
}

// C(k x m) += A(n x k)^T * B(n x m)
inline void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict c,
                    std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace leo::num::kernels
