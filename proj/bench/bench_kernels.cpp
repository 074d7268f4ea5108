// Compares the OpenMP kernels against the serial reference implementations:
// wall time, speedup, and max abs deviation (expected 0 — same summation
// order). Run with a thread count via OMP_NUM_THREADS or --threads.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "gifl/kernels.hpp"
#include "gifl/rng.hpp"
#include "gifl/spectral.hpp"
#include "gifl/tensor.hpp"

using namespace gifl;
using clock_type = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  const auto t0 = clock_type::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-28s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   max|diff| %.3g\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0) threads = std::atoi(argv[i + 1]);
  }
  if (threads > 0) set_threads(threads);
  std::printf("threads: %d\n", gifl::threads());

  Rng rng(1234);

  {
    const std::int64_t m = 512, k = 512, n = 512;
    Tensor a({m, k}), b({k, n}), c1({m, n}), c2({m, n});
    for (std::int64_t i = 0; i < a.size(); ++i) a[i] = rng.next_double() - 0.5;
    for (std::int64_t i = 0; i < b.size(); ++i) b[i] = rng.next_double() - 0.5;
    const double ts = time_ms([&] { serial::matmul(a.data(), b.data(), c1.data(), m, k, n); }, 3);
    const double tp = time_ms([&] { kernels::matmul(a.data(), b.data(), c2.data(), m, k, n); }, 3);
    report("matmul 512^3", ts, tp, max_abs_diff(c1, c2));
  }

  {
    const std::int64_t rows = 65536, dim = 64;
    Tensor x({rows, dim}), g({dim}), bz({dim}), y1({rows, dim}), y2({rows, dim});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.next_double() * 2.0 - 1.0;
    g.fill(1.0);
    const double ts = time_ms(
        [&] {
          serial::layernorm_rows(x.data(), g.data(), bz.data(), y1.data(), nullptr, nullptr, rows,
                                 dim, 1e-5);
        },
        5);
    const double tp = time_ms(
        [&] {
          kernels::layernorm_rows(x.data(), g.data(), bz.data(), y2.data(), nullptr, nullptr, rows,
                                  dim, 1e-5);
        },
        5);
    report("layernorm 65536x64", ts, tp, max_abs_diff(y1, y2));
  }

  {
    const std::int64_t rows = 16384, dim = 256;
    Tensor x({rows, dim}), y1({rows, dim}), y2({rows, dim});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.next_double() * 8.0 - 4.0;
    const double ts = time_ms([&] { serial::softmax_rows(x.data(), y1.data(), rows, dim); }, 5);
    const double tp = time_ms([&] { kernels::softmax_rows(x.data(), y2.data(), rows, dim); }, 5);
    report("softmax 16384x256", ts, tp, max_abs_diff(y1, y2));
  }

  {
    const std::int64_t n = 1 << 22;
    Tensor x({n}), y1({n}), y2({n});
    for (std::int64_t i = 0; i < n; ++i) x[i] = rng.next_double() * 4.0 - 2.0;
    const double ts = time_ms([&] { serial::gelu(x.data(), y1.data(), n); }, 3);
    const double tp = time_ms([&] { kernels::gelu(x.data(), y2.data(), n); }, 3);
    report("gelu 4M", ts, tp, max_abs_diff(y1, y2));

    const double ss = time_ms([&] { volatile double s = serial::sum(x.data(), n); (void)s; }, 5);
    const double sp = time_ms([&] { volatile double s = kernels::det_sum(x.data(), n); (void)s; }, 5);
    const double a = serial::sum(x.data(), n);
    const double b = kernels::det_sum(x.data(), n);
    report("det_sum 4M", ss, sp, std::abs(a - b));
  }

  {
    // Batch of per-token transforms at the ViT-L shape (1024 tokens, d=32).
    Tensor x({8, 1024, 1024});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.next_double() - 0.5;
    const auto scope = SpectralScope::per_token();
    set_threads(1);
    const double ts = time_ms([&] { patch_fft(x, scope, 32, 32); }, 2);
    set_threads(threads > 0 ? threads : 0);
    const double tp = time_ms([&] { patch_fft(x, scope, 32, 32); }, 2);
    set_threads(1);
    Tensor y1 = patch_fft(x, scope, 32, 32);
    set_threads(threads > 0 ? threads : 0);
    Tensor y2 = patch_fft(x, scope, 32, 32);
    report("patch_fft 8x1024x1024", ts, tp, max_abs_diff(y1, y2));
  }

  return 0;
}
