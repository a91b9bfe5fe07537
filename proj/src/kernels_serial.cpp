#include "hgfx/kernels.hpp"

namespace hgfx::kernels::serial {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = a[i * p + k];
      const double* bk = b + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * p;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * p;
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += ai[k] * bj[k];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t p, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t k = 0; k < p; ++k) {
      const double aki = a[k * m + i];
      const double* bk = b + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
}

void pairwise_sqdist(const double* x, const double* y, double* out, std::size_t n, std::size_t m, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[i * d + k] - y[j * d + k];
        acc += diff * diff;
      }
      out[i * m + j] = acc;
    }
  }
}

void ssm_scan_forward(const double* x, const double* abar, const double* bbar, const double* cmat, double* h,
                      double* y, std::size_t n, std::size_t d, std::size_t s) {
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      const double xt = x[t * d + c];
      double acc = 0.0;
      for (std::size_t q = 0; q < s; ++q) {
        const double prev = t == 0 ? 0.0 : h[((t - 1) * d + c) * s + q];
        const double ht = abar[c * s + q] * prev + bbar[c * s + q] * xt;
        h[(t * d + c) * s + q] = ht;
        acc += cmat[c * s + q] * ht;
      }
      y[t * d + c] = acc + xt;
    }
  }
}

void ssm_scan_backward(const double* gy, const double* x, const double* abar, const double* bbar,
                       const double* cmat, const double* h, double* gx, double* gabar, double* gbbar, double* gc,
                       std::size_t n, std::size_t d, std::size_t s) {
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t q = 0; q < s; ++q) {
      const std::size_t cq = c * s + q;
      double carry = 0.0;  // dL/dh_{t} arriving from step t+1
      for (std::size_t t = n; t-- > 0;) {
        const double g = gy[t * d + c];
        const double ht = h[(t * d + c) * s + q];
        gc[cq] += g * ht;
        const double dh = g * cmat[cq] + carry;
        const double prev = t == 0 ? 0.0 : h[((t - 1) * d + c) * s + q];
        gabar[cq] += dh * prev;
        gbbar[cq] += dh * x[t * d + c];
        gx[t * d + c] += dh * bbar[cq];
        carry = dh * abar[cq];
      }
    }
    for (std::size_t t = 0; t < n; ++t) gx[t * d + c] += gy[t * d + c];
  }
}

}  // namespace hgfx::kernels::serial
