#include "gifl/spectral.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "gifl/error.hpp"

namespace gifl {

namespace {

using cplx = std::complex<double>;

bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2, no normalization.
void fft_radix2(cplx* a, std::int64_t n, bool inverse) {
  for (std::int64_t i = 1, j = 0; i < n; ++i) {
    std::int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::int64_t len = 2; len <= n; len <<= 1) {
    double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    cplx wl(std::cos(ang), std::sin(ang));
    for (std::int64_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::int64_t j = 0; j < len / 2; ++j) {
        cplx u = a[i + j];
        cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Naive O(n^2) DFT for non-power-of-two lengths, no normalization.
void dft_naive(cplx* a, std::int64_t n, bool inverse) {
  std::vector<cplx> out(static_cast<std::size_t>(n));
  const double sign = inverse ? 2.0 : -2.0;
  for (std::int64_t k = 0; k < n; ++k) {
    cplx acc(0.0, 0.0);
    for (std::int64_t m = 0; m < n; ++m) {
      double ang = sign * M_PI * static_cast<double>(k) * static_cast<double>(m) / static_cast<double>(n);
      acc += a[m] * cplx(std::cos(ang), std::sin(ang));
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  for (std::int64_t i = 0; i < n; ++i) a[i] = out[static_cast<std::size_t>(i)];
}

// Orthonormal 1-D transform: 1/sqrt(n) in both directions.
void fft_1d(cplx* a, std::int64_t n, bool inverse) {
  if (n == 1) return;
  if (is_pow2(n)) {
    fft_radix2(a, n, inverse);
  } else {
    dft_naive(a, n, inverse);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::int64_t i = 0; i < n; ++i) a[i] *= scale;
}

// Separable orthonormal 2-D transform of a row-major h x w block.
void fft_2d(cplx* grid, std::int64_t h, std::int64_t w, bool inverse) {
  for (std::int64_t r = 0; r < h; ++r) fft_1d(grid + r * w, w, inverse);
  std::vector<cplx> col(static_cast<std::size_t>(h));
  for (std::int64_t c = 0; c < w; ++c) {
    for (std::int64_t r = 0; r < h; ++r) col[static_cast<std::size_t>(r)] = grid[r * w + c];
    fft_1d(col.data(), h, inverse);
    for (std::int64_t r = 0; r < h; ++r) grid[r * w + c] = col[static_cast<std::size_t>(r)];
  }
}

struct GridShape {
  std::int64_t batch;
  std::int64_t tokens;
  std::int64_t dim;
};

GridShape check_tokens(const Tensor& x, const char* where) {
  if (x.rank() != 3) throw_shape(std::string(where) + ": expected B x N x D, got " + x.shape_str());
  return {x.dim(0), x.dim(1), x.dim(2)};
}

void check_grid(const SpectralScope& scope, std::int64_t tokens, int grid_h, int grid_w,
                const char* where) {
  if (scope.kind == SpectralScopeKind::PerToken) return;
  if (grid_h <= 0 || grid_w <= 0 || static_cast<std::int64_t>(grid_h) * grid_w != tokens) {
    throw_shape(std::string(where) + ": token grid " + std::to_string(grid_h) + "x" +
                std::to_string(grid_w) + " does not cover N=" + std::to_string(tokens));
  }
  if (scope.kind == SpectralScopeKind::TokenWindows) {
    if (scope.window <= 0 || grid_h % scope.window != 0 || grid_w % scope.window != 0) {
      throw_shape(std::string(where) + ": window must divide both token grid dims");
    }
  }
}

struct CountGuard {
  std::atomic<std::uint64_t>* slot;
  explicit CountGuard(std::atomic<std::uint64_t>* s) : slot(s) { slot->fetch_add(1); }
};

struct Counters {
  std::atomic<std::uint64_t> fft_per_token{0};
  std::atomic<std::uint64_t> fft_token_windows{0};
  std::atomic<std::uint64_t> fft_full_grid{0};
  std::atomic<std::uint64_t> ifft_per_token{0};
  std::atomic<std::uint64_t> ifft_token_windows{0};
  std::atomic<std::uint64_t> ifft_full_grid{0};
};

Counters& counters() {
  static Counters c;
  return c;
}

std::atomic<std::uint64_t>* counter_slot(SpectralScopeKind kind, bool inverse) {
  auto& c = counters();
  switch (kind) {
    case SpectralScopeKind::PerToken: return inverse ? &c.ifft_per_token : &c.fft_per_token;
    case SpectralScopeKind::TokenWindows:
      return inverse ? &c.ifft_token_windows : &c.fft_token_windows;
    case SpectralScopeKind::FullGrid: return inverse ? &c.ifft_full_grid : &c.fft_full_grid;
  }
  return nullptr;
}

}  // namespace

int per_token_side(std::int64_t dim, bool allow_pad) {
  auto side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(dim))));
  if (side * side == dim) return static_cast<int>(side);
  if (!allow_pad) throw_shape("per-token scope: D=" + std::to_string(dim) + " is not a perfect square");
  while (side * side < dim) ++side;
  return static_cast<int>(side);
}

std::int64_t spectral_width(std::int64_t dim, const SpectralScope& scope) {
  if (scope.kind == SpectralScopeKind::PerToken) {
    std::int64_t side = per_token_side(dim, scope.allow_pad);
    return 2 * side * side;
  }
  return 2 * dim;
}

Tensor patch_fft(const Tensor& x, const SpectralScope& scope, int grid_h, int grid_w) {
  const auto [batch, tokens, dim] = check_tokens(x, "patch_fft");
  check_grid(scope, tokens, grid_h, grid_w, "patch_fft");
  CountGuard guard(counter_slot(scope.kind, false));

  const std::int64_t out_dim = spectral_width(dim, scope);
  Tensor out({batch, tokens, out_dim});
  const std::int64_t half = out_dim / 2;

  if (scope.kind == SpectralScopeKind::PerToken) {
    const int side = per_token_side(dim, scope.allow_pad);
    const std::int64_t cells = static_cast<std::int64_t>(side) * side;
    const std::int64_t bt = batch * tokens;
#pragma omp parallel for schedule(static) if (bt * cells >= 8192)
    for (std::int64_t r = 0; r < bt; ++r) {
      std::vector<cplx> grid(static_cast<std::size_t>(cells), cplx(0.0, 0.0));
      const double* src = x.data() + r * dim;
      for (std::int64_t j = 0; j < dim; ++j) grid[static_cast<std::size_t>(j)] = cplx(src[j], 0.0);
      fft_2d(grid.data(), side, side, false);
      double* dst = out.data() + r * out_dim;
      for (std::int64_t j = 0; j < cells; ++j) {
        dst[j] = grid[static_cast<std::size_t>(j)].real();
        dst[half + j] = grid[static_cast<std::size_t>(j)].imag();
      }
    }
    return out;
  }

  // Grid scopes: one 2-D transform per (batch, channel) over token positions.
  const int w = scope.kind == SpectralScopeKind::FullGrid ? 0 : scope.window;
  const std::int64_t bc = batch * dim;
#pragma omp parallel for schedule(static) if (bc * tokens >= 8192)
  for (std::int64_t r = 0; r < bc; ++r) {
    const std::int64_t b = r / dim;
    const std::int64_t c = r % dim;
    std::vector<cplx> grid(static_cast<std::size_t>(tokens));
    for (std::int64_t t = 0; t < tokens; ++t) grid[static_cast<std::size_t>(t)] = cplx(x.at3(b, t, c), 0.0);
    if (scope.kind == SpectralScopeKind::FullGrid) {
      fft_2d(grid.data(), grid_h, grid_w, false);
    } else {
      std::vector<cplx> win(static_cast<std::size_t>(w) * w);
      for (int wy = 0; wy < grid_h; wy += w) {
        for (int wx = 0; wx < grid_w; wx += w) {
          for (int dy = 0; dy < w; ++dy) {
            for (int dx = 0; dx < w; ++dx) {
              win[static_cast<std::size_t>(dy) * w + dx] =
                  grid[static_cast<std::size_t>(wy + dy) * grid_w + (wx + dx)];
            }
          }
          fft_2d(win.data(), w, w, false);
          for (int dy = 0; dy < w; ++dy) {
            for (int dx = 0; dx < w; ++dx) {
              grid[static_cast<std::size_t>(wy + dy) * grid_w + (wx + dx)] =
                  win[static_cast<std::size_t>(dy) * w + dx];
            }
          }
        }
      }
    }
    for (std::int64_t t = 0; t < tokens; ++t) {
      out.at3(b, t, c) = grid[static_cast<std::size_t>(t)].real();
      out.at3(b, t, half + c) = grid[static_cast<std::size_t>(t)].imag();
    }
  }
  return out;
}

Tensor patch_ifft(const Tensor& xf, const SpectralScope& scope, int grid_h, int grid_w,
                  std::int64_t dim) {
  const auto [batch, tokens, packed] = check_tokens(xf, "patch_ifft");
  if (packed % 2 != 0) throw_shape("patch_ifft: packed dim must be even");
  if (packed != spectral_width(dim, scope)) {
    throw_shape("patch_ifft: packed dim " + std::to_string(packed) + " does not match scope width " +
                std::to_string(spectral_width(dim, scope)));
  }
  check_grid(scope, tokens, grid_h, grid_w, "patch_ifft");
  CountGuard guard(counter_slot(scope.kind, true));

  const std::int64_t half = packed / 2;
  Tensor out({batch, tokens, dim});

  if (scope.kind == SpectralScopeKind::PerToken) {
    const int side = per_token_side(dim, scope.allow_pad);
    const std::int64_t cells = static_cast<std::int64_t>(side) * side;
    const std::int64_t bt = batch * tokens;
#pragma omp parallel for schedule(static) if (bt * cells >= 8192)
    for (std::int64_t r = 0; r < bt; ++r) {
      std::vector<cplx> grid(static_cast<std::size_t>(cells));
      const double* src = xf.data() + r * packed;
      for (std::int64_t j = 0; j < cells; ++j) grid[static_cast<std::size_t>(j)] = cplx(src[j], src[half + j]);
      fft_2d(grid.data(), side, side, true);
      double* dst = out.data() + r * dim;
      // Real part only; pad positions beyond D are dropped.
      for (std::int64_t j = 0; j < dim; ++j) dst[j] = grid[static_cast<std::size_t>(j)].real();
    }
    return out;
  }

  const int w = scope.kind == SpectralScopeKind::FullGrid ? 0 : scope.window;
  const std::int64_t bc = batch * dim;
#pragma omp parallel for schedule(static) if (bc * tokens >= 8192)
  for (std::int64_t r = 0; r < bc; ++r) {
    const std::int64_t b = r / dim;
    const std::int64_t c = r % dim;
    std::vector<cplx> grid(static_cast<std::size_t>(tokens));
    for (std::int64_t t = 0; t < tokens; ++t) {
      grid[static_cast<std::size_t>(t)] = cplx(xf.at3(b, t, c), xf.at3(b, t, half + c));
    }
    if (scope.kind == SpectralScopeKind::FullGrid) {
      fft_2d(grid.data(), grid_h, grid_w, true);
    } else {
      std::vector<cplx> win(static_cast<std::size_t>(w) * w);
      for (int wy = 0; wy < grid_h; wy += w) {
        for (int wx = 0; wx < grid_w; wx += w) {
          for (int dy = 0; dy < w; ++dy) {
            for (int dx = 0; dx < w; ++dx) {
              win[static_cast<std::size_t>(dy) * w + dx] =
                  grid[static_cast<std::size_t>(wy + dy) * grid_w + (wx + dx)];
            }
          }
          fft_2d(win.data(), w, w, true);
          for (int dy = 0; dy < w; ++dy) {
            for (int dx = 0; dx < w; ++dx) {
              grid[static_cast<std::size_t>(wy + dy) * grid_w + (wx + dx)] =
                  win[static_cast<std::size_t>(dy) * w + dx];
            }
          }
        }
      }
    }
    for (std::int64_t t = 0; t < tokens; ++t) out.at3(b, t, c) = grid[static_cast<std::size_t>(t)].real();
  }
  return out;
}

Tensor spectral_compress(const Tensor& xf, const SpectralLinear& lin) {
  return linear_forward(xf, lin.compress);
}

Tensor spectral_expand(const Tensor& x, const SpectralLinear& lin) {
  return linear_forward(x, lin.expand);
}

void reset_spectral_counts() {
  auto& c = counters();
  c.fft_per_token = 0;
  c.fft_token_windows = 0;
  c.fft_full_grid = 0;
  c.ifft_per_token = 0;
  c.ifft_token_windows = 0;
  c.ifft_full_grid = 0;
}

SpectralCallCounts spectral_counts() {
  auto& c = counters();
  return {c.fft_per_token.load(),  c.fft_token_windows.load(),  c.fft_full_grid.load(),
          c.ifft_per_token.load(), c.ifft_token_windows.load(), c.ifft_full_grid.load()};
}

}  // namespace gifl
