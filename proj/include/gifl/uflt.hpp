#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gifl/spectral.hpp"
#include "gifl/vit.hpp"

namespace gifl {

enum class UfltVariant { Dual, SpatialOnly, SpectralOnly };

const char* to_string(UfltVariant v);
UfltVariant uflt_variant_from_string(const std::string& s);

struct UFLTConfig {
  int layers = 2;
  std::int64_t dim = 16;
  int heads = 2;
  int ffn_ratio = 4;
  int patch = 4;
  UfltVariant variant = UfltVariant::Dual;
  SpectralScope scope = SpectralScope::per_token();
  std::uint64_t seed = 0;
};

void validate(const UFLTConfig& cfg);

// One dual-domain attention component: parallel ViT layers on the spatial and
// spectral streams plus the per-block cross maps that exchange them.
struct UfltBlockParams {
  VitLayerParams spa;
  VitLayerParams spe;
  SpectralLinear cross;
};

struct UfltParams {
  UFLTConfig cfg;
  std::vector<UfltBlockParams> blocks;
  // Entry compress (spectral stream input) and exit expand (spectral stream
  // output); unused by the spatial-only variant.
  SpectralLinear bridge;
  LayerNormParams norm;  // final fusion norm, applied in every variant
};

UfltParams init_params(const UFLTConfig& cfg);

struct UfltBlockCache {
  VitLayerCache spa;
  VitLayerCache spe;
  Tensor a_f;     // spectral ViT output, input of cross.expand
  Tensor fft_as;  // patch_fft of the spatial ViT output, input of cross.compress
};

struct UfltCache {
  Tensor fft_fin;  // entry transform of f_in, input of bridge.compress
  std::vector<UfltBlockCache> blocks;
  Tensor exit_in;  // input of bridge.expand (last spectral-stream state)
  LayerNormCache norm;
  int grid_h = 0;
  int grid_w = 0;
};

// One dual-domain exchange: ViT layers on both streams, then the FFC-style
// two-way residual cross connection. Returns (spatial, spectral) states.
std::pair<Tensor, Tensor> dual_domain_block(const Tensor& x_spa, const Tensor& x_spe,
                                            const UfltBlockParams& params,
                                            const SpectralScope& scope, int heads, int grid_h,
                                            int grid_w, UfltBlockCache* cache);

// f_in: frozen-encoder patch tokens, B x N x D with N = grid_h * grid_w.
// Returns the reconstructed features F_r, same shape. cache may be null.
Tensor uflt_forward(const Tensor& f_in, const UfltParams& params, int grid_h, int grid_w,
                    UfltCache* cache);

// Accumulates parameter gradients, returns gradient wrt f_in.
Tensor uflt_backward(const Tensor& grad, const UfltCache& cache, const UfltParams& params,
                     UfltParams& grads);

UfltParams make_grads(const UfltParams& params);
void collect(UfltParams& p, const std::string& prefix, std::vector<NamedParam>& out);

// Parameter accounting without allocating: itemized per sub-component.
struct ParamCountItem {
  std::string component;
  std::int64_t params;
};

struct ParamCountReport {
  std::vector<ParamCountItem> items;
  std::int64_t total = 0;
  double flops_g = 0.0;  // forward pass at the stated resolution; 2 flops per MAC
};

std::int64_t vit_layer_param_count(std::int64_t dim, int ffn_ratio);

// decoder=true adds the D -> patch^2 mask decoder.
ParamCountReport count_uflt_params(const UFLTConfig& cfg, bool decoder, int resolution);

}  // namespace gifl
