#pragma once

#include <cstdint>

namespace gifl {

// Thread-count control for the OpenMP kernels. set_threads(1) gives the
// fully serial path used by --deterministic; the kernels themselves are
// bit-reproducible at any fixed thread count because every output element
// is written by exactly one thread with a fixed inner summation order.
void set_threads(int n);
int threads();

namespace kernels {

// c[m,n] = a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* c,
            std::int64_t m, std::int64_t k, std::int64_t n);

// c[m,n] = a[m,k] * b[n,k]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::int64_t m, std::int64_t k, std::int64_t n);

// c[k_dim,n] = a[m,k_dim]^T * b[m,n]   (weight-gradient shape)
void matmul_tn(const double* a, const double* b, double* c,
               std::int64_t m, std::int64_t k_dim, std::int64_t n);

void add_bias(double* x, const double* bias, std::int64_t rows, std::int64_t dim);

// y = x * gelu_cdf(x), exact erf form.
void gelu(const double* x, double* y, std::int64_t n);
// dx += dy * d gelu(x) / dx
void gelu_backward(const double* x, const double* dy, double* dx, std::int64_t n);

// Row-wise layer norm with learned gain/bias. Caches xhat and inv_std for
// the backward pass when the pointers are non-null.
void layernorm_rows(const double* x, const double* gain, const double* bias,
                    double* y, double* xhat, double* inv_std,
                    std::int64_t rows, std::int64_t dim, double eps);

void layernorm_rows_backward(const double* dy, const double* xhat, const double* inv_std,
                             const double* gain, double* dx, double* dgain, double* dbias,
                             std::int64_t rows, std::int64_t dim);

void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t dim);
void softmax_rows_backward(const double* dy, const double* y, double* dx,
                           std::int64_t rows, std::int64_t dim);

// Deterministic chunked sum: identical result at any thread count.
double det_sum(const double* x, std::int64_t n);

}  // namespace kernels

// Serial reference implementations of the parallel kernels above. Kept for
// testing (the unit suite asserts bitwise equality against the OpenMP path)
// and for the kernel benchmark.
namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::int64_t m, std::int64_t k, std::int64_t n);
void matmul_nt(const double* a, const double* b, double* c,
               std::int64_t m, std::int64_t k, std::int64_t n);
void matmul_tn(const double* a, const double* b, double* c,
               std::int64_t m, std::int64_t k_dim, std::int64_t n);
void gelu(const double* x, double* y, std::int64_t n);
void layernorm_rows(const double* x, const double* gain, const double* bias,
                    double* y, double* xhat, double* inv_std,
                    std::int64_t rows, std::int64_t dim, double eps);
void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t dim);
double sum(const double* x, std::int64_t n);

}  // namespace serial

}  // namespace gifl
