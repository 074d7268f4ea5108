#include "gifl/vit.hpp"

#include <cmath>
#include <vector>

#include "gifl/error.hpp"

namespace gifl {

namespace {

// Small serial helpers for the per-(batch,head) blocks; the outer loop is the
// parallel axis.
void mm(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::int64_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* bp = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void mm_nt(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
  }
}

void mm_tn(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k_dim, std::int64_t n) {
  for (std::int64_t i = 0; i < k_dim; ++i) {
    double* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::int64_t r = 0; r < m; ++r) {
      const double av = a[r * k_dim + i];
      const double* br = b + r * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
}

}  // namespace

Tensor vit_layer_forward(const Tensor& x, const VitLayerParams& p, int heads,
                         VitLayerCache* cache) {
  if (x.rank() != 3) throw_shape("vit_layer_forward: expected B x N x D");
  const std::int64_t B = x.dim(0), N = x.dim(1), D = x.dim(2);
  if (D != p.dim()) throw_shape("vit_layer_forward: dim mismatch");
  if (heads <= 0 || D % heads != 0) throw_shape("vit_layer_forward: heads must divide D");
  const std::int64_t dh = D / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  VitLayerCache local;
  VitLayerCache& cc = cache ? *cache : local;

  cc.h1 = layernorm_forward(x, p.ln1, &cc.ln1);
  cc.qkv = linear_forward(cc.h1, p.qkv);

  cc.probs = Tensor({B, static_cast<std::int64_t>(heads), N, N});
  cc.ctx = Tensor({B, N, D});

  const std::int64_t bh = B * heads;
#pragma omp parallel for schedule(static) if (bh * N * N * dh >= 16384)
  for (std::int64_t r = 0; r < bh; ++r) {
    const std::int64_t b = r / heads;
    const std::int64_t h = r % heads;
    const std::int64_t off = h * dh;

    std::vector<double> q(static_cast<std::size_t>(N * dh));
    std::vector<double> k(static_cast<std::size_t>(N * dh));
    std::vector<double> v(static_cast<std::size_t>(N * dh));
    for (std::int64_t t = 0; t < N; ++t) {
      const double* row = cc.qkv.data() + (b * N + t) * 3 * D;
      for (std::int64_t j = 0; j < dh; ++j) {
        q[static_cast<std::size_t>(t * dh + j)] = row[off + j];
        k[static_cast<std::size_t>(t * dh + j)] = row[D + off + j];
        v[static_cast<std::size_t>(t * dh + j)] = row[2 * D + off + j];
      }
    }

    double* probs = cc.probs.data() + (b * heads + h) * N * N;
    mm_nt(q.data(), k.data(), probs, N, dh, N);
    for (std::int64_t i = 0; i < N * N; ++i) probs[i] *= scale;
    serial::softmax_rows(probs, probs, N, N);

    std::vector<double> ctx_h(static_cast<std::size_t>(N * dh));
    mm(probs, v.data(), ctx_h.data(), N, N, dh);
    for (std::int64_t t = 0; t < N; ++t) {
      double* dst = cc.ctx.data() + (b * N + t) * D + off;
      for (std::int64_t j = 0; j < dh; ++j) dst[j] = ctx_h[static_cast<std::size_t>(t * dh + j)];
    }
  }

  Tensor attn = linear_forward(cc.ctx, p.proj);
  Tensor x2(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) x2[i] = x[i] + attn[i];

  cc.h2 = layernorm_forward(x2, p.ln2, &cc.ln2);
  cc.a1 = linear_forward(cc.h2, p.fc1);
  cc.g = Tensor(cc.a1.shape());
  kernels::gelu(cc.a1.data(), cc.g.data(), cc.a1.size());
  Tensor ffn = linear_forward(cc.g, p.fc2);

  Tensor out(x.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = x2[i] + ffn[i];
  return out;
}

Tensor vit_layer_backward(const Tensor& grad, const VitLayerCache& cache,
                          const VitLayerParams& p, int heads, VitLayerParams& grads) {
  const std::int64_t B = grad.dim(0), N = grad.dim(1), D = grad.dim(2);
  const std::int64_t dh = D / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // FFN branch.
  Tensor d_g = linear_backward(grad, cache.g, p.fc2, grads.fc2);
  Tensor d_a1(d_g.shape());
  kernels::gelu_backward(cache.a1.data(), d_g.data(), d_a1.data(), d_a1.size());
  Tensor d_h2 = linear_backward(d_a1, cache.h2, p.fc1, grads.fc1);
  Tensor d_x2 = layernorm_backward(d_h2, cache.ln2, p.ln2, grads.ln2);
  for (std::int64_t i = 0; i < d_x2.size(); ++i) d_x2[i] += grad[i];

  // Attention branch.
  Tensor d_ctx = linear_backward(d_x2, cache.ctx, p.proj, grads.proj);
  Tensor d_qkv({B, N, 3 * D});

  const std::int64_t bh = B * heads;
#pragma omp parallel for schedule(static) if (bh * N * N * dh >= 16384)
  for (std::int64_t r = 0; r < bh; ++r) {
    const std::int64_t b = r / heads;
    const std::int64_t h = r % heads;
    const std::int64_t off = h * dh;

    std::vector<double> q(static_cast<std::size_t>(N * dh));
    std::vector<double> k(static_cast<std::size_t>(N * dh));
    std::vector<double> v(static_cast<std::size_t>(N * dh));
    std::vector<double> d_ctx_h(static_cast<std::size_t>(N * dh));
    for (std::int64_t t = 0; t < N; ++t) {
      const double* row = cache.qkv.data() + (b * N + t) * 3 * D;
      for (std::int64_t j = 0; j < dh; ++j) {
        q[static_cast<std::size_t>(t * dh + j)] = row[off + j];
        k[static_cast<std::size_t>(t * dh + j)] = row[D + off + j];
        v[static_cast<std::size_t>(t * dh + j)] = row[2 * D + off + j];
        d_ctx_h[static_cast<std::size_t>(t * dh + j)] = d_ctx[(b * N + t) * D + off + j];
      }
    }

    const double* probs = cache.probs.data() + (b * heads + h) * N * N;

    // d_probs = d_ctx_h v^T ; d_v = probs^T d_ctx_h
    std::vector<double> d_probs(static_cast<std::size_t>(N * N));
    std::vector<double> d_v(static_cast<std::size_t>(N * dh));
    mm_nt(d_ctx_h.data(), v.data(), d_probs.data(), N, dh, N);
    mm_tn(probs, d_ctx_h.data(), d_v.data(), N, N, dh);

    // Through the softmax, then the scaled q k^T.
    std::vector<double> d_scores(static_cast<std::size_t>(N * N), 0.0);
    for (std::int64_t i = 0; i < N; ++i) {
      const double* dp = d_probs.data() + i * N;
      const double* pr = probs + i * N;
      double dot = 0.0;
      for (std::int64_t j = 0; j < N; ++j) dot += dp[j] * pr[j];
      double* ds = d_scores.data() + i * N;
      for (std::int64_t j = 0; j < N; ++j) ds[j] = (dp[j] - dot) * pr[j] * scale;
    }

    std::vector<double> d_q(static_cast<std::size_t>(N * dh));
    std::vector<double> d_k(static_cast<std::size_t>(N * dh));
    mm(d_scores.data(), k.data(), d_q.data(), N, N, dh);
    mm_tn(d_scores.data(), q.data(), d_k.data(), N, N, dh);

    for (std::int64_t t = 0; t < N; ++t) {
      double* row = d_qkv.data() + (b * N + t) * 3 * D;
      for (std::int64_t j = 0; j < dh; ++j) {
        row[off + j] = d_q[static_cast<std::size_t>(t * dh + j)];
        row[D + off + j] = d_k[static_cast<std::size_t>(t * dh + j)];
        row[2 * D + off + j] = d_v[static_cast<std::size_t>(t * dh + j)];
      }
    }
  }

  Tensor d_h1 = linear_backward(d_qkv, cache.h1, p.qkv, grads.qkv);
  Tensor d_x = layernorm_backward(d_h1, cache.ln1, p.ln1, grads.ln1);
  for (std::int64_t i = 0; i < d_x.size(); ++i) d_x[i] += d_x2[i];
  return d_x;
}

void collect(VitLayerParams& p, const std::string& prefix, std::vector<NamedParam>& out) {
  collect(p.ln1, prefix + ".ln1", out);
  collect(p.qkv, prefix + ".attn.qkv", out);
  collect(p.proj, prefix + ".attn.proj", out);
  collect(p.ln2, prefix + ".ln2", out);
  collect(p.fc1, prefix + ".ffn.fc1", out);
  collect(p.fc2, prefix + ".ffn.fc2", out);
}

void init_vit_layer(VitLayerParams& p, Rng& rng, double sigma) {
  init_layernorm(p.ln1);
  init_linear(p.qkv, rng, sigma);
  init_linear(p.proj, rng, sigma);
  init_layernorm(p.ln2);
  init_linear(p.fc1, rng, sigma);
  init_linear(p.fc2, rng, sigma);
}

}  // namespace gifl
