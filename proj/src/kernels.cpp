#include "gifl/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace gifl {

namespace {
int g_threads = 0;  // 0 = OpenMP default
}

void set_threads(int n) {
  g_threads = n;
  if (n > 0) omp_set_num_threads(n);
}

int threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

namespace kernels {

// Below this much work a parallel region costs more than it saves; the
// serial fallback keeps the identical summation order.
constexpr std::int64_t kParallelWork = 16384;

void matmul(const double* a, const double* b, double* c,
            std::int64_t m, std::int64_t k, std::int64_t n) {
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWork)
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
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelWork)
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
#pragma omp parallel for schedule(static) if (m * k_dim * n >= kParallelWork)
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

void add_bias(double* x, const double* bias, std::int64_t rows, std::int64_t dim) {
#pragma omp parallel for schedule(static) if (rows * dim >= kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i) {
    double* xi = x + i * dim;
    for (std::int64_t j = 0; j < dim; ++j) xi[j] += bias[j];
  }
}

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

inline double gelu_one(double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); }

inline double gelu_grad_one(double v) {
  double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
  double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
  return cdf + v * pdf;
}

}  // namespace

void gelu(const double* x, double* y, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * gelu_grad_one(x[i]);
}

void layernorm_rows(const double* x, const double* gain, const double* bias,
                    double* y, double* xhat, double* inv_std,
                    std::int64_t rows, std::int64_t dim, double eps) {
#pragma omp parallel for schedule(static) if (rows * dim >= kParallelWork)
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

void layernorm_rows_backward(const double* dy, const double* xhat, const double* inv_std,
                             const double* gain, double* dx, double* dgain, double* dbias,
                             std::int64_t rows, std::int64_t dim) {
#pragma omp parallel for schedule(static) if (rows * dim >= kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* dyi = dy + i * dim;
    const double* xhi = xhat + i * dim;
    double* dxi = dx + i * dim;
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) {
      double dxh = dyi[j] * gain[j];
      sum_dxhat += dxh;
      sum_dxhat_xhat += dxh * xhi[j];
    }
    double inv_dim = 1.0 / static_cast<double>(dim);
    for (std::int64_t j = 0; j < dim; ++j) {
      double dxh = dyi[j] * gain[j];
      dxi[j] += inv_std[i] * (dxh - inv_dim * sum_dxhat - xhi[j] * inv_dim * sum_dxhat_xhat);
    }
  }
  // Column reductions: one thread owns each column, rows summed in order.
#pragma omp parallel for schedule(static) if (rows * dim >= kParallelWork)
  for (std::int64_t j = 0; j < dim; ++j) {
    double dg = 0.0, db = 0.0;
    for (std::int64_t i = 0; i < rows; ++i) {
      dg += dy[i * dim + j] * xhat[i * dim + j];
      db += dy[i * dim + j];
    }
    dgain[j] += dg;
    dbias[j] += db;
  }
}

void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t dim) {
#pragma omp parallel for schedule(static) if (rows * dim >= kParallelWork)
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

void softmax_rows_backward(const double* dy, const double* y, double* dx,
                           std::int64_t rows, std::int64_t dim) {
#pragma omp parallel for schedule(static) if (rows * dim >= kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* dyi = dy + i * dim;
    const double* yi = y + i * dim;
    double* dxi = dx + i * dim;
    double dot = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) dot += dyi[j] * yi[j];
    for (std::int64_t j = 0; j < dim; ++j) dxi[j] += (dyi[j] - dot) * yi[j];
  }
}

double det_sum(const double* x, std::int64_t n) {
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks <= 1) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += x[i];
    return acc;
  }
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t lo = c * kChunk;
    const std::int64_t hi = std::min(n, lo + kChunk);
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) acc += x[i];
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace kernels
}  // namespace gifl
