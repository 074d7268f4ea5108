#include "gifl/nn.hpp"

#include "gifl/error.hpp"

namespace gifl {

namespace {

std::int64_t row_count(const Tensor& x, std::int64_t in_dim, const char* where) {
  if (x.rank() < 1 || x.dim(x.rank() - 1) != in_dim) {
    throw_shape(std::string(where) + ": last dim " + x.shape_str() + " != " + std::to_string(in_dim));
  }
  return x.size() / in_dim;
}

std::vector<std::int64_t> with_last_dim(const Tensor& x, std::int64_t d) {
  auto shape = x.shape();
  shape.back() = d;
  return shape;
}

}  // namespace

Tensor linear_forward(const Tensor& x, const LinearParams& p) {
  const std::int64_t in = p.in_dim(), out = p.out_dim();
  const std::int64_t rows = row_count(x, in, "linear_forward");
  Tensor y(with_last_dim(x, out));
  kernels::matmul(x.data(), p.weight.data(), y.data(), rows, in, out);
  kernels::add_bias(y.data(), p.bias.data(), rows, out);
  return y;
}

Tensor linear_backward(const Tensor& grad_out, const Tensor& x, const LinearParams& p,
                       LinearParams& grads) {
  const std::int64_t in = p.in_dim(), out = p.out_dim();
  const std::int64_t rows = row_count(x, in, "linear_backward");
  if (grad_out.size() != rows * out) throw_shape("linear_backward: grad shape mismatch");

  // dW += x^T g, accumulated through a temporary to keep += semantics.
  Tensor dw({in, out});
  kernels::matmul_tn(x.data(), grad_out.data(), dw.data(), rows, in, out);
  for (std::int64_t i = 0; i < dw.size(); ++i) grads.weight[i] += dw[i];
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* g = grad_out.data() + r * out;
    for (std::int64_t j = 0; j < out; ++j) grads.bias[j] += g[j];
  }

  Tensor dx(with_last_dim(x, in));
  kernels::matmul_nt(grad_out.data(), p.weight.data(), dx.data(), rows, out, in);
  return dx;
}

Tensor layernorm_forward(const Tensor& x, const LayerNormParams& p, LayerNormCache* cache) {
  const std::int64_t dim = p.gain.dim(0);
  const std::int64_t rows = row_count(x, dim, "layernorm_forward");
  Tensor y(x.shape());
  double* xhat = nullptr;
  double* inv_std = nullptr;
  if (cache) {
    cache->xhat = Tensor(x.shape());
    cache->inv_std = Tensor({rows});
    xhat = cache->xhat.data();
    inv_std = cache->inv_std.data();
  }
  kernels::layernorm_rows(x.data(), p.gain.data(), p.bias.data(), y.data(), xhat, inv_std,
                          rows, dim, kLayerNormEps);
  return y;
}

Tensor layernorm_backward(const Tensor& grad_out, const LayerNormCache& cache,
                          const LayerNormParams& p, LayerNormParams& grads) {
  const std::int64_t dim = p.gain.dim(0);
  const std::int64_t rows = grad_out.size() / dim;
  Tensor dx(grad_out.shape());
  kernels::layernorm_rows_backward(grad_out.data(), cache.xhat.data(), cache.inv_std.data(),
                                   p.gain.data(), dx.data(), grads.gain.data(),
                                   grads.bias.data(), rows, dim);
  return dx;
}

void collect(LinearParams& p, const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".weight", &p.weight});
  out.push_back({prefix + ".bias", &p.bias});
}

void collect(LayerNormParams& p, const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".gain", &p.gain});
  out.push_back({prefix + ".bias", &p.bias});
}

void init_linear(LinearParams& p, Rng& rng, double sigma) {
  for (std::int64_t i = 0; i < p.weight.size(); ++i) p.weight[i] = rng.next_trunc_normal(sigma);
  p.bias.fill(0.0);
}

void init_layernorm(LayerNormParams& p) {
  p.gain.fill(1.0);
  p.bias.fill(0.0);
}

}  // namespace gifl
