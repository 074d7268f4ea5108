#pragma once

#include "gifl/nn.hpp"
#include "gifl/tensor.hpp"

namespace gifl {

// Pre-norm transformer encoder layer: multi-head self-attention and a GELU
// MLP, both with residual connections.
struct VitLayerParams {
  LayerNormParams ln1;
  LinearParams qkv;   // D -> 3D, packed [q | k | v]
  LinearParams proj;  // D -> D
  LayerNormParams ln2;
  LinearParams fc1;   // D -> ffn_ratio * D
  LinearParams fc2;   // ffn_ratio * D -> D

  VitLayerParams() = default;
  VitLayerParams(std::int64_t dim, std::int64_t ffn_ratio)
      : ln1(dim),
        qkv(dim, 3 * dim),
        proj(dim, dim),
        ln2(dim),
        fc1(dim, ffn_ratio * dim),
        fc2(ffn_ratio * dim, dim) {}

  std::int64_t dim() const { return qkv.in_dim(); }
};

struct VitLayerCache {
  LayerNormCache ln1;
  Tensor h1;     // ln1 output
  Tensor qkv;    // B x N x 3D
  Tensor probs;  // B x H x N x N attention weights
  Tensor ctx;    // merged attention context, B x N x D
  LayerNormCache ln2;
  Tensor h2;     // ln2 output
  Tensor a1;     // fc1 output, pre-GELU
  Tensor g;      // GELU output
};

// x: B x N x D. cache may be null for inference.
Tensor vit_layer_forward(const Tensor& x, const VitLayerParams& p, int heads,
                         VitLayerCache* cache);

// grad: B x N x D gradient of the layer output. Accumulates into `grads`,
// returns the gradient wrt the layer input.
Tensor vit_layer_backward(const Tensor& grad, const VitLayerCache& cache,
                          const VitLayerParams& p, int heads, VitLayerParams& grads);

void collect(VitLayerParams& p, const std::string& prefix, std::vector<NamedParam>& out);
void init_vit_layer(VitLayerParams& p, Rng& rng, double sigma);

}  // namespace gifl
