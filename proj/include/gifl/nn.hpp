#pragma once

#include <string>
#include <vector>

#include "gifl/kernels.hpp"
#include "gifl/rng.hpp"
#include "gifl/tensor.hpp"

namespace gifl {

constexpr double kLayerNormEps = 1e-5;

// weight is [in, out]; rows of x multiply from the left.
struct LinearParams {
  Tensor weight;
  Tensor bias;

  LinearParams() = default;
  LinearParams(std::int64_t in, std::int64_t out) : weight({in, out}), bias({out}) {}

  std::int64_t in_dim() const { return weight.dim(0); }
  std::int64_t out_dim() const { return weight.dim(1); }
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;

  LayerNormParams() = default;
  explicit LayerNormParams(std::int64_t dim) : gain({dim}), bias({dim}) {}
};

// x viewed as [rows, in] -> [rows, out]
Tensor linear_forward(const Tensor& x, const LinearParams& p);

// Returns grad wrt x; accumulates weight/bias grads into `grads`.
Tensor linear_backward(const Tensor& grad_out, const Tensor& x, const LinearParams& p,
                       LinearParams& grads);

struct LayerNormCache {
  Tensor xhat;
  Tensor inv_std;
};

Tensor layernorm_forward(const Tensor& x, const LayerNormParams& p, LayerNormCache* cache);
Tensor layernorm_backward(const Tensor& grad_out, const LayerNormCache& cache,
                          const LayerNormParams& p, LayerNormParams& grads);

// Flat view over a parameter struct; the collect() overloads register every
// tensor in a fixed order shared by init, Adam, and checkpoints.
struct NamedParam {
  std::string name;
  Tensor* tensor;
};

void collect(LinearParams& p, const std::string& prefix, std::vector<NamedParam>& out);
void collect(LayerNormParams& p, const std::string& prefix, std::vector<NamedParam>& out);

// Init rules: weights trunc-normal(sigma), biases 0, norm gains 1.
void init_linear(LinearParams& p, Rng& rng, double sigma);
void init_layernorm(LayerNormParams& p);

}  // namespace gifl
