#include "gifl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

// Reference kernels: same inner summation order as the OpenMP versions with
// the parallel outer loop removed, so the two paths must agree bitwise.

namespace gifl {
namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::memset(ci, 0, sizeof(double) * static_cast<std::size_t>(n));
    const double* ai = a + i * k;
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::int64_t m, std::int64_t k_dim, std::int64_t n) {
  for (std::int64_t i = 0; i < k_dim; ++i) {
    double* ci = c + i * n;
    std::memset(ci, 0, sizeof(double) * static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < m; ++r) {
      const double av = a[r * k_dim + i];
      const double* br = b + r * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
}

void gelu(const double* x, double* y, std::int64_t n) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  for (std::int64_t i = 0; i < n; ++i) y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * kInvSqrt2));
}

void layernorm_rows(const double* x, const double* gain, const double* bias,
                    double* y, double* xhat, double* inv_std,
                    std::int64_t rows, std::int64_t dim, double eps) {
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* xi = x + i * dim;
    double mean = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) mean += xi[j];
    mean /= static_cast<double>(dim);
    double var = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) {
      double d = xi[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(dim);
    double is = 1.0 / std::sqrt(var + eps);
    if (inv_std) inv_std[i] = is;
    double* yi = y + i * dim;
    for (std::int64_t j = 0; j < dim; ++j) {
      double xh = (xi[j] - mean) * is;
      if (xhat) xhat[i * dim + j] = xh;
      yi[j] = xh * gain[j] + bias[j];
    }
  }
}

void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t dim) {
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* xi = x + i * dim;
    double* yi = y + i * dim;
    double mx = xi[0];
    for (std::int64_t j = 1; j < dim; ++j) mx = std::max(mx, xi[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    double inv = 1.0 / z;
    for (std::int64_t j = 0; j < dim; ++j) yi[j] *= inv;
  }
}

double sum(const double* x, std::int64_t n) {
  constexpr std::int64_t kChunk = 4096;
  double total = 0.0;
  for (std::int64_t lo = 0; lo < n; lo += kChunk) {
    const std::int64_t hi = std::min(n, lo + kChunk);
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) acc += x[i];
    total += acc;
  }
  return total;
}

}  // namespace serial
}  // namespace gifl
