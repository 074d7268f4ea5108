#include "gifl/uflt.hpp"

#include <cmath>

#include "gifl/error.hpp"

namespace gifl {

const char* to_string(UfltVariant v) {
  switch (v) {
    case UfltVariant::Dual: return "dual";
    case UfltVariant::SpatialOnly: return "spatial_only";
    case UfltVariant::SpectralOnly: return "spectral_only";
  }
  return "?";
}

UfltVariant uflt_variant_from_string(const std::string& s) {
  if (s == "dual") return UfltVariant::Dual;
  if (s == "spatial_only") return UfltVariant::SpatialOnly;
  if (s == "spectral_only") return UfltVariant::SpectralOnly;
  throw_config("unknown UFLT variant: " + s);
}

void validate(const UFLTConfig& cfg) {
  if (cfg.layers < 1) throw_config("UFLT needs at least one layer");
  if (cfg.dim <= 0 || cfg.heads <= 0 || cfg.dim % cfg.heads != 0) {
    throw_config("UFLT dim must be divisible by heads");
  }
  if (cfg.ffn_ratio < 1) throw_config("ffn_ratio must be >= 1");
  if (cfg.patch < 1) throw_config("patch must be >= 1");
  if (cfg.variant != UfltVariant::SpatialOnly) {
    if (cfg.scope.kind == SpectralScopeKind::TokenWindows && cfg.scope.window < 1) {
      throw_config("token_windows scope needs a positive window");
    }
    // Probe the per-token reshape so a bad D fails at config time.
    spectral_width(cfg.dim, cfg.scope);
  }
}

UfltParams init_params(const UFLTConfig& cfg) {
  validate(cfg);
  UfltParams p;
  p.cfg = cfg;
  const bool spa = cfg.variant != UfltVariant::SpectralOnly;
  const bool spe = cfg.variant != UfltVariant::SpatialOnly;
  p.blocks.resize(static_cast<std::size_t>(cfg.layers));
  for (auto& b : p.blocks) {
    if (spa) b.spa = VitLayerParams(cfg.dim, cfg.ffn_ratio);
    if (spe) b.spe = VitLayerParams(cfg.dim, cfg.ffn_ratio);
    if (cfg.variant == UfltVariant::Dual) b.cross = SpectralLinear(cfg.dim, cfg.scope);
  }
  if (spe) p.bridge = SpectralLinear(cfg.dim, cfg.scope);
  p.norm = LayerNormParams(cfg.dim);

  Rng rng(cfg.seed);
  constexpr double kSigma = 0.02;
  for (auto& b : p.blocks) {
    if (spa) init_vit_layer(b.spa, rng, kSigma);
    if (spe) init_vit_layer(b.spe, rng, kSigma);
    if (cfg.variant == UfltVariant::Dual) {
      init_linear(b.cross.compress, rng, kSigma);
      init_linear(b.cross.expand, rng, kSigma);
    }
  }
  if (spe) {
    init_linear(p.bridge.compress, rng, kSigma);
    init_linear(p.bridge.expand, rng, kSigma);
  }
  init_layernorm(p.norm);
  return p;
}

std::pair<Tensor, Tensor> dual_domain_block(const Tensor& x_spa, const Tensor& x_spe,
                                            const UfltBlockParams& params,
                                            const SpectralScope& scope, int heads, int grid_h,
                                            int grid_w, UfltBlockCache* cache) {
  check_same_shape(x_spa, x_spe, "dual_domain_block");
  const std::int64_t dim = x_spa.dim(2);
  Tensor a_s = vit_layer_forward(x_spa, params.spa, heads, cache ? &cache->spa : nullptr);
  Tensor a_f = vit_layer_forward(x_spe, params.spe, heads, cache ? &cache->spe : nullptr);

  Tensor fft_as = patch_fft(a_s, scope, grid_h, grid_w);
  Tensor from_spe = patch_ifft(spectral_expand(a_f, params.cross), scope, grid_h, grid_w, dim);
  Tensor to_spe = spectral_compress(fft_as, params.cross);

  Tensor out_spa(a_s.shape());
  for (std::int64_t j = 0; j < out_spa.size(); ++j) out_spa[j] = a_s[j] + from_spe[j];
  Tensor out_spe(a_f.shape());
  for (std::int64_t j = 0; j < out_spe.size(); ++j) out_spe[j] = a_f[j] + to_spe[j];

  if (cache) {
    cache->a_f = std::move(a_f);
    cache->fft_as = std::move(fft_as);
  }
  return {std::move(out_spa), std::move(out_spe)};
}

Tensor uflt_forward(const Tensor& f_in, const UfltParams& params, int grid_h, int grid_w,
                    UfltCache* cache) {
  const UFLTConfig& cfg = params.cfg;
  if (f_in.rank() != 3 || f_in.dim(2) != cfg.dim) {
    throw_shape("uflt_forward: expected B x N x D with D=" + std::to_string(cfg.dim));
  }
  if (static_cast<std::int64_t>(grid_h) * grid_w != f_in.dim(1)) {
    throw_shape("uflt_forward: grid dims do not cover N");
  }

  UfltCache local;
  UfltCache& cc = cache ? *cache : local;
  cc.grid_h = grid_h;
  cc.grid_w = grid_w;
  cc.blocks.resize(params.blocks.size());

  if (cfg.variant == UfltVariant::SpatialOnly) {
    Tensor x = f_in;
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
      x = vit_layer_forward(x, params.blocks[i].spa, cfg.heads, cache ? &cc.blocks[i].spa : nullptr);
    }
    return layernorm_forward(x, params.norm, cache ? &cc.norm : nullptr);
  }

  if (cfg.variant == UfltVariant::SpectralOnly) {
    cc.fft_fin = patch_fft(f_in, cfg.scope, grid_h, grid_w);
    Tensor x = spectral_compress(cc.fft_fin, params.bridge);
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
      x = vit_layer_forward(x, params.blocks[i].spe, cfg.heads, cache ? &cc.blocks[i].spe : nullptr);
    }
    cc.exit_in = x;
    Tensor back = patch_ifft(spectral_expand(x, params.bridge), cfg.scope, grid_h, grid_w, cfg.dim);
    return layernorm_forward(back, params.norm, cache ? &cc.norm : nullptr);
  }

  // Dual: parallel streams with a two-way residual exchange per block.
  cc.fft_fin = patch_fft(f_in, cfg.scope, grid_h, grid_w);
  Tensor x_spa = f_in;
  Tensor x_spe = spectral_compress(cc.fft_fin, params.bridge);
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    auto [next_spa, next_spe] = dual_domain_block(x_spa, x_spe, params.blocks[i], cfg.scope,
                                                  cfg.heads, grid_h, grid_w,
                                                  cache ? &cc.blocks[i] : nullptr);
    x_spa = std::move(next_spa);
    x_spe = std::move(next_spe);
  }
  cc.exit_in = x_spe;
  Tensor from_spe = patch_ifft(spectral_expand(x_spe, params.bridge), cfg.scope, grid_h, grid_w, cfg.dim);
  Tensor fused(x_spa.shape());
  for (std::int64_t j = 0; j < fused.size(); ++j) fused[j] = x_spa[j] + from_spe[j];
  return layernorm_forward(fused, params.norm, cache ? &cc.norm : nullptr);
}

Tensor uflt_backward(const Tensor& grad, const UfltCache& cache, const UfltParams& params,
                     UfltParams& grads) {
  const UFLTConfig& cfg = params.cfg;
  const int gh = cache.grid_h, gw = cache.grid_w;

  if (cfg.variant == UfltVariant::SpatialOnly) {
    Tensor g = layernorm_backward(grad, cache.norm, params.norm, grads.norm);
    for (std::size_t i = params.blocks.size(); i-- > 0;) {
      g = vit_layer_backward(g, cache.blocks[i].spa, params.blocks[i].spa, cfg.heads,
                             grads.blocks[i].spa);
    }
    return g;
  }

  if (cfg.variant == UfltVariant::SpectralOnly) {
    Tensor g = layernorm_backward(grad, cache.norm, params.norm, grads.norm);
    // Exit was ifft(expand(x)); adjoint of ifft is fft.
    Tensor g_packed = patch_fft(g, cfg.scope, gh, gw);
    Tensor gx = linear_backward(g_packed, cache.exit_in, params.bridge.expand, grads.bridge.expand);
    for (std::size_t i = params.blocks.size(); i-- > 0;) {
      gx = vit_layer_backward(gx, cache.blocks[i].spe, params.blocks[i].spe, cfg.heads,
                              grads.blocks[i].spe);
    }
    Tensor g_fft = linear_backward(gx, cache.fft_fin, params.bridge.compress, grads.bridge.compress);
    return patch_ifft(g_fft, cfg.scope, gh, gw, cfg.dim);
  }

  Tensor g_fused = layernorm_backward(grad, cache.norm, params.norm, grads.norm);
  Tensor d_spa = g_fused;
  Tensor g_packed = patch_fft(g_fused, cfg.scope, gh, gw);
  Tensor d_spe = linear_backward(g_packed, cache.exit_in, params.bridge.expand, grads.bridge.expand);

  for (std::size_t i = params.blocks.size(); i-- > 0;) {
    const auto& b = params.blocks[i];
    const auto& bc = cache.blocks[i];
    // out_spa = a_s + ifft(expand(a_f));  out_spe = a_f + compress(fft(a_s))
    Tensor d_a_s = d_spa;
    Tensor d_a_f = d_spe;

    Tensor d_fft_as = linear_backward(d_spe, bc.fft_as, b.cross.compress, grads.blocks[i].cross.compress);
    Tensor d_a_s_cross = patch_ifft(d_fft_as, cfg.scope, gh, gw, cfg.dim);
    for (std::int64_t j = 0; j < d_a_s.size(); ++j) d_a_s[j] += d_a_s_cross[j];

    Tensor d_expand_af = patch_fft(d_spa, cfg.scope, gh, gw);
    Tensor d_a_f_cross = linear_backward(d_expand_af, bc.a_f, b.cross.expand, grads.blocks[i].cross.expand);
    for (std::int64_t j = 0; j < d_a_f.size(); ++j) d_a_f[j] += d_a_f_cross[j];

    d_spa = vit_layer_backward(d_a_s, bc.spa, b.spa, cfg.heads, grads.blocks[i].spa);
    d_spe = vit_layer_backward(d_a_f, bc.spe, b.spe, cfg.heads, grads.blocks[i].spe);
  }

  Tensor g_fft = linear_backward(d_spe, cache.fft_fin, params.bridge.compress, grads.bridge.compress);
  Tensor d_fin = patch_ifft(g_fft, cfg.scope, gh, gw, cfg.dim);
  for (std::int64_t j = 0; j < d_fin.size(); ++j) d_fin[j] += d_spa[j];
  return d_fin;
}

UfltParams make_grads(const UfltParams& params) {
  UfltParams g;
  g.cfg = params.cfg;
  g.blocks.resize(params.blocks.size());
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const auto& b = params.blocks[i];
    auto& gb = g.blocks[i];
    auto zero_like_linear = [](const LinearParams& p) {
      LinearParams z;
      z.weight = Tensor::zeros_like(p.weight);
      z.bias = Tensor::zeros_like(p.bias);
      return z;
    };
    auto zero_like_vit = [&](const VitLayerParams& p) {
      VitLayerParams z;
      z.ln1.gain = Tensor::zeros_like(p.ln1.gain);
      z.ln1.bias = Tensor::zeros_like(p.ln1.bias);
      z.qkv = zero_like_linear(p.qkv);
      z.proj = zero_like_linear(p.proj);
      z.ln2.gain = Tensor::zeros_like(p.ln2.gain);
      z.ln2.bias = Tensor::zeros_like(p.ln2.bias);
      z.fc1 = zero_like_linear(p.fc1);
      z.fc2 = zero_like_linear(p.fc2);
      return z;
    };
    if (!b.spa.qkv.weight.empty()) gb.spa = zero_like_vit(b.spa);
    if (!b.spe.qkv.weight.empty()) gb.spe = zero_like_vit(b.spe);
    if (!b.cross.compress.weight.empty()) {
      gb.cross.compress = zero_like_linear(b.cross.compress);
      gb.cross.expand = zero_like_linear(b.cross.expand);
    }
  }
  if (!params.bridge.compress.weight.empty()) {
    g.bridge.compress.weight = Tensor::zeros_like(params.bridge.compress.weight);
    g.bridge.compress.bias = Tensor::zeros_like(params.bridge.compress.bias);
    g.bridge.expand.weight = Tensor::zeros_like(params.bridge.expand.weight);
    g.bridge.expand.bias = Tensor::zeros_like(params.bridge.expand.bias);
  }
  g.norm.gain = Tensor::zeros_like(params.norm.gain);
  g.norm.bias = Tensor::zeros_like(params.norm.bias);
  return g;
}

void collect(UfltParams& p, const std::string& prefix, std::vector<NamedParam>& out) {
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string bp = prefix + ".block" + std::to_string(i);
    if (!b.spa.qkv.weight.empty()) collect(b.spa, bp + ".spa", out);
    if (!b.spe.qkv.weight.empty()) collect(b.spe, bp + ".spe", out);
    if (!b.cross.compress.weight.empty()) {
      collect(b.cross.compress, bp + ".cross.compress", out);
      collect(b.cross.expand, bp + ".cross.expand", out);
    }
  }
  if (!p.bridge.compress.weight.empty()) {
    collect(p.bridge.compress, prefix + ".bridge.compress", out);
    collect(p.bridge.expand, prefix + ".bridge.expand", out);
  }
  collect(p.norm, prefix + ".norm", out);
}

std::int64_t vit_layer_param_count(std::int64_t dim, int ffn_ratio) {
  const std::int64_t r = ffn_ratio;
  std::int64_t n = 0;
  n += 2 * dim;                  // ln1
  n += dim * 3 * dim + 3 * dim;  // qkv
  n += dim * dim + dim;          // proj
  n += 2 * dim;                  // ln2
  n += dim * r * dim + r * dim;  // fc1
  n += r * dim * dim + dim;      // fc2
  return n;
}

namespace {

std::int64_t linear_count(std::int64_t in, std::int64_t out) { return in * out + out; }

// 2-D transform MAC estimate for an n-point block (separable radix-2 model).
double fft2_macs(double n) { return 2.5 * n * std::log2(std::max(2.0, n)); }

}  // namespace

ParamCountReport count_uflt_params(const UFLTConfig& cfg, bool decoder, int resolution) {
  validate(cfg);
  ParamCountReport rep;
  const std::int64_t D = cfg.dim;
  const std::int64_t L = cfg.layers;
  const std::int64_t layer = vit_layer_param_count(D, cfg.ffn_ratio);
  const std::int64_t sw = cfg.variant == UfltVariant::SpatialOnly ? 0 : spectral_width(D, cfg.scope);

  const bool spa = cfg.variant != UfltVariant::SpectralOnly;
  const bool spe = cfg.variant != UfltVariant::SpatialOnly;

  if (spa) rep.items.push_back({"spatial_stream(" + std::to_string(L) + " layers)", L * layer});
  if (spe) rep.items.push_back({"spectral_stream(" + std::to_string(L) + " layers)", L * layer});
  if (cfg.variant == UfltVariant::Dual) {
    rep.items.push_back({"cross_maps(" + std::to_string(L) + " blocks)",
                         L * (linear_count(sw, D) + linear_count(D, sw))});
  }
  if (spe) {
    rep.items.push_back({"bridge(entry_compress+exit_expand)",
                         linear_count(sw, D) + linear_count(D, sw)});
  }
  rep.items.push_back({"final_norm", 2 * D});
  if (decoder) {
    rep.items.push_back({"decoder(fc " + std::to_string(D) + "->" +
                             std::to_string(static_cast<std::int64_t>(cfg.patch) * cfg.patch) + ")",
                         linear_count(D, static_cast<std::int64_t>(cfg.patch) * cfg.patch)});
  }
  for (const auto& it : rep.items) rep.total += it.params;

  // Forward MACs at the given square resolution, patch tokens only.
  const std::int64_t g = resolution / cfg.patch;
  const double n = static_cast<double>(g) * g;
  const double layer_macs = (4.0 + 2.0 * cfg.ffn_ratio) * n * static_cast<double>(D) * static_cast<double>(D) +
                            2.0 * n * n * static_cast<double>(D);
  double macs = 0.0;
  if (spa) macs += static_cast<double>(L) * layer_macs;
  if (spe) macs += static_cast<double>(L) * layer_macs;

  double fft_macs_per_call = 0.0;
  if (spe) {
    if (cfg.scope.kind == SpectralScopeKind::PerToken) {
      const int side = per_token_side(D, cfg.scope.allow_pad);
      fft_macs_per_call = n * fft2_macs(static_cast<double>(side) * side);
    } else if (cfg.scope.kind == SpectralScopeKind::TokenWindows) {
      const double wins = n / (static_cast<double>(cfg.scope.window) * cfg.scope.window);
      fft_macs_per_call = static_cast<double>(D) * wins * fft2_macs(static_cast<double>(cfg.scope.window) * cfg.scope.window);
    } else {
      fft_macs_per_call = static_cast<double>(D) * fft2_macs(n);
    }
  }
  const double cross_macs = n * (static_cast<double>(sw) * D + static_cast<double>(D) * sw);
  if (cfg.variant == UfltVariant::Dual) {
    macs += static_cast<double>(L) * (cross_macs + 2.0 * fft_macs_per_call);
    macs += cross_macs + 2.0 * fft_macs_per_call;  // bridge entry/exit
  } else if (cfg.variant == UfltVariant::SpectralOnly) {
    macs += cross_macs + 2.0 * fft_macs_per_call;
  }
  if (decoder) macs += n * static_cast<double>(D) * cfg.patch * cfg.patch;

  rep.flops_g = 2.0 * macs / 1e9;
  return rep;
}

}  // namespace gifl
