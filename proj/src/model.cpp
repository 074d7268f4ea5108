#include "gifl/model.hpp"

#include <cmath>

#include "gifl/checkpoint.hpp"
#include "gifl/error.hpp"

namespace gifl {

DecoderParams init_decoder(std::int64_t dim, int patch, std::uint64_t seed) {
  DecoderParams d(dim, patch);
  Rng rng(seed ^ 0x5eedDEC0DEULL);
  init_linear(d.fc, rng, 0.02);
  return d;
}

const char* to_string(TargetMode m) {
  switch (m) {
    case TargetMode::Authentic: return "authentic";
    case TargetMode::Mask: return "mask";
    case TargetMode::Full: return "full";
    case TargetMode::Forged: return "forged";
  }
  return "?";
}

TargetMode target_mode_from_string(const std::string& s) {
  if (s == "authentic") return TargetMode::Authentic;
  if (s == "mask") return TargetMode::Mask;
  if (s == "full") return TargetMode::Full;
  if (s == "forged") return TargetMode::Forged;
  throw_config("unknown target mode: " + s);
}

Tensor encode(const std::vector<Image>& imgs, const FrozenEncoder& enc) {
  return enc.encode(imgs);
}

Tensor build_target_features(const std::vector<Image>& imgs, const std::vector<BinaryMask>& masks,
                             const FrozenEncoder& enc, TargetMode mode) {
  if (imgs.size() != masks.size()) throw_shape("build_target_features: batch size mismatch");
  std::vector<Image> inputs;
  inputs.reserve(imgs.size());
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const Image& img = imgs[i];
    const BinaryMask& m = masks[i];
    if (img.height != m.height || img.width != m.width) {
      throw_shape("build_target_features: image/mask dims differ");
    }
    switch (mode) {
      case TargetMode::Full:
        inputs.push_back(img);
        break;
      case TargetMode::Mask: {
        Image mi(img.height, img.width);
        for (std::int64_t p = 0; p < mi.pixels(); ++p) {
          const double v = m.data[static_cast<std::size_t>(p)] ? 1.0 : 0.0;
          mi.data[static_cast<std::size_t>(p) * 3 + 0] = v;
          mi.data[static_cast<std::size_t>(p) * 3 + 1] = v;
          mi.data[static_cast<std::size_t>(p) * 3 + 2] = v;
        }
        inputs.push_back(std::move(mi));
        break;
      }
      case TargetMode::Authentic:
      case TargetMode::Forged: {
        const bool keep_forged = mode == TargetMode::Forged;
        Image mi = img;
        for (std::int64_t p = 0; p < mi.pixels(); ++p) {
          const double keep = (m.data[static_cast<std::size_t>(p)] != 0) == keep_forged ? 1.0 : 0.0;
          mi.data[static_cast<std::size_t>(p) * 3 + 0] *= keep;
          mi.data[static_cast<std::size_t>(p) * 3 + 1] *= keep;
          mi.data[static_cast<std::size_t>(p) * 3 + 2] *= keep;
        }
        inputs.push_back(std::move(mi));
        break;
      }
    }
  }
  return enc.encode(inputs);
}

Tensor decode_mask(const Tensor& f_r, const DecoderParams& dec, int patch, int grid_h, int grid_w) {
  if (f_r.rank() != 3) throw_shape("decode_mask: expected B x N x D");
  const std::int64_t B = f_r.dim(0), N = f_r.dim(1);
  if (static_cast<std::int64_t>(grid_h) * grid_w != N) {
    throw_shape("decode_mask: token grid dims do not cover N");
  }
  const std::int64_t pp = static_cast<std::int64_t>(patch) * patch;
  if (dec.fc.out_dim() != pp) throw_shape("decode_mask: decoder patch size mismatch");

  Tensor tok_logits = linear_forward(f_r, dec.fc);  // B x N x p^2
  const int H = grid_h * patch, W = grid_w * patch;
  Tensor logits({B, H, W});
#pragma omp parallel for schedule(static) if (B * N * pp >= 16384)
  for (std::int64_t bt = 0; bt < B * N; ++bt) {
    const std::int64_t b = bt / N;
    const std::int64_t t = bt % N;
    const int gy = static_cast<int>(t) / grid_w;
    const int gx = static_cast<int>(t) % grid_w;
    const double* src = tok_logits.data() + bt * pp;
    for (int dy = 0; dy < patch; ++dy) {
      double* dst = logits.data() + (b * H + (gy * patch + dy)) * W + gx * patch;
      for (int dx = 0; dx < patch; ++dx) dst[dx] = src[dy * patch + dx];
    }
  }
  return logits;
}

Tensor decode_mask_backward(const Tensor& d_logits, const Tensor& f_r, const DecoderParams& dec,
                            int patch, int grid_h, int grid_w, DecoderParams& grads) {
  const std::int64_t B = f_r.dim(0), N = f_r.dim(1);
  const std::int64_t pp = static_cast<std::int64_t>(patch) * patch;
  const int W = grid_w * patch;
  const int H = grid_h * patch;
  Tensor d_tok({B, N, pp});
#pragma omp parallel for schedule(static) if (B * N * pp >= 16384)
  for (std::int64_t bt = 0; bt < B * N; ++bt) {
    const std::int64_t b = bt / N;
    const std::int64_t t = bt % N;
    const int gy = static_cast<int>(t) / grid_w;
    const int gx = static_cast<int>(t) % grid_w;
    double* dst = d_tok.data() + bt * pp;
    for (int dy = 0; dy < patch; ++dy) {
      const double* src = d_logits.data() + (b * H + (gy * patch + dy)) * W + gx * patch;
      for (int dx = 0; dx < patch; ++dx) dst[dy * patch + dx] = src[dx];
    }
  }
  return linear_backward(d_tok, f_r, dec.fc, grads.fc);
}

ProbMask sigmoid_probs(const Tensor& logits, std::int64_t batch_index) {
  const std::int64_t H = logits.dim(1), W = logits.dim(2);
  ProbMask p(static_cast<int>(H), static_cast<int>(W));
  const double* src = logits.data() + batch_index * H * W;
  for (std::int64_t i = 0; i < H * W; ++i) p.data[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-src[i]));
  return p;
}

Tensor masks_to_tensor(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) throw_shape("masks_to_tensor: empty batch");
  const int H = masks[0].height, W = masks[0].width;
  Tensor t({static_cast<std::int64_t>(masks.size()), H, W});
  for (std::size_t b = 0; b < masks.size(); ++b) {
    if (masks[b].height != H || masks[b].width != W) throw_shape("masks_to_tensor: ragged batch");
    double* dst = t.data() + static_cast<std::int64_t>(b) * H * W;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(H) * W; ++i) {
      dst[i] = masks[b].data[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
  }
  return t;
}

namespace {

constexpr double kIouEps = 1e-6;

void check_finite(const Tensor& t, const char* name) {
  for (std::int64_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) throw_numeric(std::string(name) + " contains a non-finite value");
  }
}

struct LossAccum {
  double l2 = 0.0;
  double bce = 0.0;
  double inter = 0.0;  // sum p*g
  double sum_p = 0.0;
  double sum_g = 0.0;
};

LossAccum accumulate_loss(const Tensor& f_r, const Tensor& f_t, const Tensor& logits,
                          const Tensor& masks, Objective objective) {
  LossAccum a;
  if (objective == Objective::Regression) {
    check_same_shape(f_r, f_t, "total_loss(features)");
    Tensor sq(f_r.shape());
    for (std::int64_t i = 0; i < f_r.size(); ++i) {
      const double d = f_r[i] - f_t[i];
      sq[i] = d * d;
    }
    a.l2 = kernels::det_sum(sq.data(), sq.size()) / static_cast<double>(f_r.size());
  }
  check_same_shape(logits, masks, "total_loss(mask)");
  const std::int64_t n = logits.size();
  Tensor bce_terms(logits.shape());
  Tensor probs(logits.shape());
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    const double z = logits[i];
    const double g = masks[i];
    // Stable form: max(z,0) - z*g + log(1 + exp(-|z|)).
    bce_terms[i] = std::max(z, 0.0) - z * g + std::log1p(std::exp(-std::abs(z)));
    probs[i] = 1.0 / (1.0 + std::exp(-z));
  }
  a.bce = kernels::det_sum(bce_terms.data(), n) / static_cast<double>(n);
  Tensor pg(logits.shape());
  for (std::int64_t i = 0; i < n; ++i) pg[i] = probs[i] * masks[i];
  a.inter = kernels::det_sum(pg.data(), n);
  a.sum_p = kernels::det_sum(probs.data(), n);
  a.sum_g = kernels::det_sum(masks.data(), n);
  return a;
}

LossValues finalize_loss(const LossAccum& a, const LossWeights& w, Objective objective) {
  LossValues v;
  v.l2 = a.l2;
  v.bce = a.bce;
  const double uni = a.sum_p + a.sum_g - a.inter;
  v.iou = 1.0 - (a.inter + kIouEps) / (uni + kIouEps);
  const double w_l2 = objective == Objective::Classification ? 0.0 : w.l2;
  v.total = w_l2 * v.l2 + w.bce * v.bce + w.iou * v.iou;
  if (!std::isfinite(v.total)) throw_numeric("total_loss is non-finite");
  return v;
}

}  // namespace

LossValues total_loss(const Tensor& f_r, const Tensor& f_t, const Tensor& logits,
                      const Tensor& masks, const LossWeights& w, Objective objective) {
  if (objective == Objective::Regression) check_finite(f_r, "f_r");
  check_finite(logits, "logits");
  return finalize_loss(accumulate_loss(f_r, f_t, logits, masks, objective), w, objective);
}

LossValues total_loss_backward(const Tensor& f_r, const Tensor& f_t, const Tensor& logits,
                               const Tensor& masks, const LossWeights& w, Objective objective,
                               Tensor& d_f_r, Tensor& d_logits) {
  if (objective == Objective::Regression) check_finite(f_r, "f_r");
  check_finite(logits, "logits");
  const LossAccum a = accumulate_loss(f_r, f_t, logits, masks, objective);
  const LossValues v = finalize_loss(a, w, objective);

  if (objective == Objective::Regression) {
    d_f_r = Tensor(f_r.shape());
    const double c = 2.0 * w.l2 / static_cast<double>(f_r.size());
#pragma omp parallel for schedule(static) if (f_r.size() >= 16384)
    for (std::int64_t i = 0; i < f_r.size(); ++i) d_f_r[i] = c * (f_r[i] - f_t[i]);
  } else {
    d_f_r = Tensor();
  }

  const std::int64_t n = logits.size();
  d_logits = Tensor(logits.shape());
  const double uni = a.sum_p + a.sum_g - a.inter;
  const double denom = (uni + kIouEps) * (uni + kIouEps);
  const double inter_eps = a.inter + kIouEps;
  const double inv_n = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    const double z = logits[i];
    const double g = masks[i];
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double d_bce = w.bce * (p - g) * inv_n;
    // d iou / d p = -(g * (uni + eps) - (inter + eps) * (1 - g)) / (uni + eps)^2
    const double d_iou_dp = -(g * (uni + kIouEps) - inter_eps * (1.0 - g)) / denom;
    const double d_iou = w.iou * d_iou_dp * p * (1.0 - p);
    d_logits[i] = d_bce + d_iou;
  }
  return v;
}

Model build_model(const EncoderConfig& enc_cfg, const UFLTConfig& uflt_cfg) {
  if (enc_cfg.dim != uflt_cfg.dim) throw_config("encoder and UFLT dims must match");
  if (enc_cfg.patch != uflt_cfg.patch) throw_config("encoder and UFLT patch sizes must match");
  Model m;
  m.encoder_cfg = enc_cfg;
  m.encoder = make_tiny_encoder(enc_cfg);
  m.uflt = init_params(uflt_cfg);
  m.decoder = init_decoder(uflt_cfg.dim, uflt_cfg.patch, uflt_cfg.seed);
  return m;
}

Prediction predict(const Image& img, const Model& model) {
  std::vector<Image> batch{img};
  Tensor f_in = encode(batch, *model.encoder);
  const int g = model.grid();
  Tensor f_r = uflt_forward(f_in, model.uflt, g, g, nullptr);
  Tensor logits = decode_mask(f_r, model.decoder, model.patch(), g, g);
  Prediction pred;
  pred.prob = sigmoid_probs(logits, 0);
  pred.mask = BinaryMask(pred.prob.height, pred.prob.width);
  double mx = 0.0;
  for (std::size_t i = 0; i < pred.prob.data.size(); ++i) {
    pred.mask.data[i] = pred.prob.data[i] >= 0.5 ? 1 : 0;
    mx = std::max(mx, pred.prob.data[i]);
  }
  pred.image_score = mx;
  return pred;
}

namespace {

nlohmann::json encoder_cfg_json(const EncoderConfig& c) {
  return {{"name", c.name},         {"patch", c.patch},   {"dim", c.dim},
          {"layers", c.layers},     {"heads", c.heads},   {"ffn_ratio", c.ffn_ratio},
          {"image_size", c.image_size}, {"seed", c.seed}};
}

EncoderConfig encoder_cfg_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.name = j.at("name").get<std::string>();
  c.patch = j.at("patch").get<int>();
  c.dim = j.at("dim").get<std::int64_t>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn_ratio = j.at("ffn_ratio").get<int>();
  c.image_size = j.at("image_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

nlohmann::json scope_json(const SpectralScope& s) {
  switch (s.kind) {
    case SpectralScopeKind::PerToken: return {{"kind", "per_token"}};
    case SpectralScopeKind::TokenWindows: return {{"kind", "token_windows"}, {"window", s.window}};
    case SpectralScopeKind::FullGrid: return {{"kind", "full_grid"}};
  }
  return {};
}

SpectralScope scope_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "per_token") return SpectralScope::per_token();
  if (kind == "token_windows") return SpectralScope::token_windows(j.at("window").get<int>());
  if (kind == "full_grid") return SpectralScope::full_grid();
  throw_config("unknown spectral scope: " + kind);
}

nlohmann::json uflt_cfg_json(const UFLTConfig& c) {
  return {{"layers", c.layers}, {"dim", c.dim},           {"heads", c.heads},
          {"ffn_ratio", c.ffn_ratio}, {"patch", c.patch}, {"variant", to_string(c.variant)},
          {"scope", scope_json(c.scope)}, {"seed", c.seed}};
}

UFLTConfig uflt_cfg_from_json(const nlohmann::json& j) {
  UFLTConfig c;
  c.layers = j.at("layers").get<int>();
  c.dim = j.at("dim").get<std::int64_t>();
  c.heads = j.at("heads").get<int>();
  c.ffn_ratio = j.at("ffn_ratio").get<int>();
  c.patch = j.at("patch").get<int>();
  c.variant = uflt_variant_from_string(j.at("variant").get<std::string>());
  c.scope = scope_from_json(j.at("scope"));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

nlohmann::json model_config_json(const Model& model) {
  return {{"encoder", encoder_cfg_json(model.encoder_cfg)},
          {"uflt", uflt_cfg_json(model.uflt.cfg)}};
}

void save_model(const Model& model, const std::string& path, const nlohmann::json& extra_meta) {
  nlohmann::json meta = extra_meta;
  meta["format"] = "gifl-model";
  meta["config"] = model_config_json(model);
  meta["config_hash"] = hash_hex(json_hash(meta["config"]));

  std::vector<NamedParam> arrays;
  auto* enc = const_cast<TinyVitEncoder*>(model.encoder.get());
  for (auto& np : enc->named_params()) arrays.push_back(np);
  collect(const_cast<UfltParams&>(model.uflt), "uflt", arrays);
  collect(const_cast<DecoderParams&>(model.decoder).fc, "decoder.fc", arrays);
  save_archive(path, meta, arrays);
}

Model load_model(const std::string& path) {
  Archive ar = load_archive(path);
  if (!ar.meta.contains("format") || ar.meta["format"] != "gifl-model") {
    throw_version("archive is not a model checkpoint: " + path);
  }
  const auto& cfg = ar.meta.at("config");
  Model m;
  m.encoder_cfg = encoder_cfg_from_json(cfg.at("encoder"));
  const UFLTConfig uflt_cfg = uflt_cfg_from_json(cfg.at("uflt"));
  m.encoder = encoder_from_arrays(m.encoder_cfg, ar.arrays);
  m.uflt = init_params(uflt_cfg);
  m.decoder = DecoderParams(uflt_cfg.dim, uflt_cfg.patch);

  std::vector<NamedParam> arrays;
  collect(m.uflt, "uflt", arrays);
  collect(m.decoder.fc, "decoder.fc", arrays);
  for (auto& np : arrays) {
    auto it = ar.arrays.find(np.name);
    if (it == ar.arrays.end()) throw_format("checkpoint missing array: " + np.name);
    if (!it->second.same_shape(*np.tensor)) {
      throw_version("checkpoint array shape mismatch for " + np.name);
    }
    *np.tensor = it->second;
  }
  return m;
}

}  // namespace gifl
