#include "gifl/encoder.hpp"

#include "gifl/error.hpp"

namespace gifl {

namespace {

void check_encoder_config(const EncoderConfig& cfg) {
  if (cfg.patch < 1 || cfg.dim < 1 || cfg.layers < 1 || cfg.heads < 1) {
    throw_config("invalid encoder config");
  }
  if (cfg.dim % cfg.heads != 0) throw_config("encoder dim must be divisible by heads");
  if (cfg.image_size % cfg.patch != 0) throw_config("encoder image_size must be divisible by patch");
}

}  // namespace

TinyVitEncoder::TinyVitEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
  check_encoder_config(cfg);
  const std::int64_t in = static_cast<std::int64_t>(cfg.patch) * cfg.patch * 3;
  patch_embed_ = LinearParams(in, cfg.dim);
  cls_ = Tensor({cfg.dim});
  pos_ = Tensor({cfg.tokens() + 1, cfg.dim});
  blocks_.assign(static_cast<std::size_t>(cfg.layers), VitLayerParams());
  for (auto& b : blocks_) b = VitLayerParams(cfg.dim, cfg.ffn_ratio);
  norm_ = LayerNormParams(cfg.dim);

  Rng rng(cfg.seed);
  constexpr double kSigma = 0.02;
  init_linear(patch_embed_, rng, kSigma);
  for (std::int64_t i = 0; i < cls_.size(); ++i) cls_[i] = rng.next_trunc_normal(kSigma);
  for (std::int64_t i = 0; i < pos_.size(); ++i) pos_[i] = rng.next_trunc_normal(kSigma);
  for (auto& b : blocks_) init_vit_layer(b, rng, kSigma);
  init_layernorm(norm_);
}

TinyVitEncoder::TinyVitEncoder(const EncoderConfig& cfg, LinearParams patch_embed, Tensor cls,
                               Tensor pos, std::vector<VitLayerParams> blocks, LayerNormParams norm)
    : cfg_(cfg),
      patch_embed_(std::move(patch_embed)),
      cls_(std::move(cls)),
      pos_(std::move(pos)),
      blocks_(std::move(blocks)),
      norm_(std::move(norm)) {
  check_encoder_config(cfg);
}

Tensor TinyVitEncoder::encode(const std::vector<Image>& batch) const {
  const std::int64_t B = static_cast<std::int64_t>(batch.size());
  if (B == 0) throw_shape("encode: empty batch");
  const int p = cfg_.patch;
  const int g = cfg_.grid();
  const std::int64_t N = cfg_.tokens();
  const std::int64_t D = cfg_.dim;
  const std::int64_t in = static_cast<std::int64_t>(p) * p * 3;

  for (const auto& img : batch) {
    if (img.height != cfg_.image_size || img.width != cfg_.image_size) {
      throw_shape("encode: image dims must equal the encoder image_size " +
                  std::to_string(cfg_.image_size));
    }
  }

  // Patchify: token t = (gy, gx), features ordered (dy, dx, c).
  Tensor patches({B, N, in});
#pragma omp parallel for schedule(static) if (B * N * in >= 16384)
  for (std::int64_t bt = 0; bt < B * N; ++bt) {
    const std::int64_t b = bt / N;
    const std::int64_t t = bt % N;
    const int gy = static_cast<int>(t) / g;
    const int gx = static_cast<int>(t) % g;
    double* dst = patches.data() + bt * in;
    const Image& img = batch[static_cast<std::size_t>(b)];
    std::int64_t k = 0;
    for (int dy = 0; dy < p; ++dy) {
      for (int dx = 0; dx < p; ++dx) {
        for (int c = 0; c < 3; ++c) dst[k++] = img.at(gy * p + dy, gx * p + dx, c);
      }
    }
  }

  Tensor x({B, N + 1, D});
  Tensor emb = linear_forward(patches, patch_embed_);
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t j = 0; j < D; ++j) x.at3(b, 0, j) = cls_[j] + pos_.at2(0, j);
    for (std::int64_t t = 0; t < N; ++t) {
      for (std::int64_t j = 0; j < D; ++j) {
        x.at3(b, t + 1, j) = emb.at3(b, t, j) + pos_.at2(t + 1, j);
      }
    }
  }

  for (const auto& b : blocks_) x = vit_layer_forward(x, b, cfg_.heads, nullptr);
  x = layernorm_forward(x, norm_, nullptr);

  // Drop the class token.
  Tensor out({B, N, D});
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t t = 0; t < N; ++t) {
      for (std::int64_t j = 0; j < D; ++j) out.at3(b, t, j) = x.at3(b, t + 1, j);
    }
  }
  return out;
}

std::uint64_t TinyVitEncoder::param_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const Tensor& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    const std::size_t n = static_cast<std::size_t>(t.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto* self = const_cast<TinyVitEncoder*>(this);
  for (const auto& np : self->named_params()) mix(*np.tensor);
  return h;
}

std::vector<NamedParam> TinyVitEncoder::named_params() {
  std::vector<NamedParam> out;
  collect(patch_embed_, "encoder.patch_embed", out);
  out.push_back({"encoder.cls_token", &cls_});
  out.push_back({"encoder.pos_embed", &pos_});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    collect(blocks_[i], "encoder.block" + std::to_string(i), out);
  }
  collect(norm_, "encoder.norm", out);
  return out;
}

std::unique_ptr<TinyVitEncoder> make_tiny_encoder(const EncoderConfig& cfg) {
  return std::make_unique<TinyVitEncoder>(cfg);
}

std::unique_ptr<TinyVitEncoder> make_dct_encoder(const EncoderConfig& cfg) {
  const int p = cfg.patch;
  const std::int64_t pp = static_cast<std::int64_t>(p) * p;
  if (cfg.dim > 2 * pp) throw_config("dct encoder needs dim <= 2 * patch^2");
  auto enc = std::make_unique<TinyVitEncoder>(cfg);

  Tensor* weight = nullptr;
  Tensor* bias = nullptr;
  for (auto& np : enc->named_params()) {
    if (np.name == "encoder.patch_embed.weight") weight = np.tensor;
    if (np.name == "encoder.patch_embed.bias") bias = np.tensor;
  }
  weight->fill(0.0);
  bias->fill(0.0);

  auto basis = [p](int u, int dy) {
    const double a = u == 0 ? std::sqrt(1.0 / p) : std::sqrt(2.0 / p);
    return a * std::cos(M_PI * (2.0 * dy + 1.0) * u / (2.0 * p));
  };
  // Feature k < p^2: DCT(u,v) of the channel mean; k >= p^2: same basis on
  // the R-B difference.
  for (std::int64_t k = 0; k < cfg.dim; ++k) {
    const bool chroma = k >= pp;
    const int base = static_cast<int>(chroma ? k - pp : k);
    const int u = base / p;
    const int v = base % p;
    for (int dy = 0; dy < p; ++dy) {
      for (int dx = 0; dx < p; ++dx) {
        const double b = basis(u, dy) * basis(v, dx);
        const std::int64_t row = (static_cast<std::int64_t>(dy) * p + dx) * 3;
        if (chroma) {
          weight->at2(row + 0, k) = b;
          weight->at2(row + 2, k) = -b;
        } else {
          weight->at2(row + 0, k) = b / 3.0;
          weight->at2(row + 1, k) = b / 3.0;
          weight->at2(row + 2, k) = b / 3.0;
        }
      }
    }
  }
  return enc;
}

std::unique_ptr<TinyVitEncoder> encoder_from_arrays(const EncoderConfig& cfg,
                                                    const std::map<std::string, Tensor>& arrays) {
  auto enc = std::make_unique<TinyVitEncoder>(cfg);
  for (auto& np : enc->named_params()) {
    auto it = arrays.find(np.name);
    if (it == arrays.end()) throw_format("encoder archive missing array: " + np.name);
    if (!it->second.same_shape(*np.tensor)) {
      throw_shape("encoder array shape mismatch for " + np.name + ": archive " +
                  it->second.shape_str() + " vs config " + np.tensor->shape_str());
    }
    *np.tensor = it->second;
  }
  return enc;
}

ParamCountReport count_encoder_params(const EncoderConfig& cfg) {
  check_encoder_config(cfg);
  ParamCountReport rep;
  const std::int64_t D = cfg.dim;
  const std::int64_t in = static_cast<std::int64_t>(cfg.patch) * cfg.patch * 3;
  const std::int64_t N = cfg.tokens();
  rep.items.push_back({"patch_embed", in * D + D});
  rep.items.push_back({"cls_token", D});
  rep.items.push_back({"pos_embed", (N + 1) * D});
  rep.items.push_back({"blocks(" + std::to_string(cfg.layers) + " layers)",
                       static_cast<std::int64_t>(cfg.layers) * vit_layer_param_count(D, cfg.ffn_ratio)});
  rep.items.push_back({"final_norm", 2 * D});
  for (const auto& it : rep.items) rep.total += it.params;

  // Forward MACs with the class token included.
  const double n = static_cast<double>(N + 1);
  const double layer_macs =
      (4.0 + 2.0 * cfg.ffn_ratio) * n * static_cast<double>(D) * static_cast<double>(D) +
      2.0 * n * n * static_cast<double>(D);
  double macs = static_cast<double>(cfg.layers) * layer_macs;
  macs += static_cast<double>(N) * static_cast<double>(in) * static_cast<double>(D);
  rep.flops_g = 2.0 * macs / 1e9;
  return rep;
}

}  // namespace gifl
