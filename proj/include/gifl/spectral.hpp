#pragma once

#include <atomic>
#include <cstdint>

#include "gifl/nn.hpp"
#include "gifl/tensor.hpp"

namespace gifl {

enum class SpectralScopeKind {
  PerToken,      // 2-D transform of each token's own D-vector reshaped d x d
  TokenWindows,  // 2-D transform of w x w windows on the token grid, per channel
  FullGrid,      // 2-D transform of the whole token grid, per channel
};

struct SpectralScope {
  SpectralScopeKind kind = SpectralScopeKind::PerToken;
  int window = 0;          // TokenWindows only
  bool allow_pad = true;   // PerToken: zero-pad D to the next perfect square

  static SpectralScope per_token() { return {SpectralScopeKind::PerToken, 0, true}; }
  static SpectralScope token_windows(int w) { return {SpectralScopeKind::TokenWindows, w, true}; }
  static SpectralScope full_grid() { return {SpectralScopeKind::FullGrid, 0, true}; }
};

// Side of the per-token transform grid (sqrt of D, rounded up when padding).
int per_token_side(std::int64_t dim, bool allow_pad);

// Width of the packed real||imag spectral feature for a D-dim token stream.
std::int64_t spectral_width(std::int64_t dim, const SpectralScope& scope);

// Forward 2-D orthonormal FFT, packed as [real plane || imag plane] along the
// feature axis: B x N x D -> B x N x spectral_width(D). grid_h * grid_w must
// equal N for the grid scopes (per-token ignores them).
Tensor patch_fft(const Tensor& x, const SpectralScope& scope, int grid_h, int grid_w);

// Inverse transform; unpacks real||imag, applies the orthonormal inverse FFT
// and keeps the real part: B x N x spectral_width(D) -> B x N x D. The
// orthonormal convention makes this exactly the adjoint of patch_fft, so each
// is the other's backward map.
Tensor patch_ifft(const Tensor& xf, const SpectralScope& scope, int grid_h, int grid_w,
                  std::int64_t dim);

// Linear bridge between the streams: compress 2S -> D, expand D -> 2S.
struct SpectralLinear {
  LinearParams compress;
  LinearParams expand;

  SpectralLinear() = default;
  SpectralLinear(std::int64_t dim, const SpectralScope& scope)
      : compress(spectral_width(dim, scope), dim), expand(dim, spectral_width(dim, scope)) {}
};

Tensor spectral_compress(const Tensor& xf, const SpectralLinear& lin);
Tensor spectral_expand(const Tensor& x, const SpectralLinear& lin);

// Call counters used by the ablation trace assertions (Options V, VII-IX).
struct SpectralCallCounts {
  std::uint64_t fft_per_token = 0;
  std::uint64_t fft_token_windows = 0;
  std::uint64_t fft_full_grid = 0;
  std::uint64_t ifft_per_token = 0;
  std::uint64_t ifft_token_windows = 0;
  std::uint64_t ifft_full_grid = 0;

  std::uint64_t total() const {
    return fft_per_token + fft_token_windows + fft_full_grid + ifft_per_token +
           ifft_token_windows + ifft_full_grid;
  }
};

void reset_spectral_counts();
SpectralCallCounts spectral_counts();

}  // namespace gifl
