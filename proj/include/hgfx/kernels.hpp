#pragma once

#include <cstddef>

// Dense inner loops. Every kernel has a plain serial reference and an OpenMP
// version; both accumulate each output element in the same order, so their
// results are bitwise identical for any thread count.
//
// All matrices are row-major. The gemm kernels accumulate into C.

namespace hgfx::kernels {

namespace serial {

// C[m,n] += A[m,p] * B[p,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n);
// C[m,n] += A[m,p] * B[n,p]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n);
// C[m,n] += A[p,m]^T * B[p,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n);

// out[i,j] = sum_k (x[i,k] - y[j,k])^2 for x[n,d], y[m,d]
void pairwise_sqdist(const double* x, const double* y, double* out, std::size_t n, std::size_t m, std::size_t d);

// Diagonal state-space scan over a length-n sequence of d channels, s states per channel:
//   h_t[c,q] = abar[c,q] * h_{t-1}[c,q] + bbar[c,q] * x_t[c]
//   y_t[c]   = sum_q cmat[c,q] * h_t[c,q] + x_t[c]
// h receives every state, shape [n,d,s].
void ssm_scan_forward(const double* x, const double* abar, const double* bbar, const double* cmat, double* h,
                      double* y, std::size_t n, std::size_t d, std::size_t s);

// Reverse pass of ssm_scan_forward. Accumulates into gx, gabar, gbbar, gc.
void ssm_scan_backward(const double* gy, const double* x, const double* abar, const double* bbar,
                       const double* cmat, const double* h, double* gx, double* gabar, double* gbbar, double* gc,
                       std::size_t n, std::size_t d, std::size_t s);

}  // namespace serial

namespace parallel {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n);
void pairwise_sqdist(const double* x, const double* y, double* out, std::size_t n, std::size_t m, std::size_t d);
void ssm_scan_forward(const double* x, const double* abar, const double* bbar, const double* cmat, double* h,
                      double* y, std::size_t n, std::size_t d, std::size_t s);
void ssm_scan_backward(const double* gy, const double* x, const double* abar, const double* bbar,
                       const double* cmat, const double* h, double* gx, double* gabar, double* gbbar, double* gc,
                       std::size_t n, std::size_t d, std::size_t s);

}  // namespace parallel

// Caps OpenMP parallelism from the HGFX_THREADS environment variable, if set.
// Returns the thread count in effect.
int configure_threads_from_env();

}  // namespace hgfx::kernels
