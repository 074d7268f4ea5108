#include "gifl/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gifl/error.hpp"

namespace fs = std::filesystem;

namespace gifl {

void apply_ablation(const std::string& option, TrainSpec& spec, UFLTConfig& cfg) {
  if (option == "baseline") {
    spec.objective = Objective::Regression;
    spec.target_mode = TargetMode::Authentic;
    cfg.variant = UfltVariant::Dual;
    cfg.scope = SpectralScope::per_token();
  } else if (option == "I") {
    spec.objective = Objective::Classification;
  } else if (option == "II") {
    spec.target_mode = TargetMode::Mask;
  } else if (option == "III") {
    spec.target_mode = TargetMode::Full;
  } else if (option == "IV") {
    spec.target_mode = TargetMode::Forged;
  } else if (option == "V") {
    cfg.variant = UfltVariant::SpatialOnly;
  } else if (option == "VI") {
    cfg.variant = UfltVariant::SpectralOnly;
  } else if (option == "VII") {
    cfg.scope = SpectralScope::full_grid();
  } else if (option == "VIII") {
    cfg.scope = SpectralScope::token_windows(2);
  } else if (option == "IX") {
    cfg.scope = SpectralScope::token_windows(8);
  } else if (option == "data-VI") {
    spec.negative_ratio = {1, 0};  // no negatives
  } else if (option == "data-VII") {
    spec.negative_ratio = {2, 1};
  } else if (option == "data-VIII") {
    spec.negative_ratio = {1, 2};
  } else if (option == "data-IX" || option == "data-XI") {
    spec.masking = true;
  } else if (option == "data-X") {
    spec.masking = false;
  } else {
    throw_config("unknown ablation option: " + option);
  }
}

AblationConfig ablation_config(const std::string& option) {
  AblationConfig out;
  apply_ablation("baseline", out.spec, out.uflt);
  if (option != "baseline") apply_ablation(option, out.spec, out.uflt);
  return out;
}

std::vector<std::string> ablation_option_names() {
  return {"baseline", "I",       "II",      "III",       "IV",     "V",      "VI",
          "VII",      "VIII",    "IX",      "data-VI",   "data-VII", "data-VIII",
          "data-IX",  "data-X",  "data-XI"};
}

void Adam::step(const std::vector<NamedParam>& params, const std::vector<NamedParam>& grads) {
  if (params.size() != grads.size()) throw_shape("Adam: params/grads size mismatch");
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.push_back(Tensor::zeros_like(*p.tensor));
      v_.push_back(Tensor::zeros_like(*p.tensor));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t s = 0; s < params.size(); ++s) {
    Tensor& p = *params[s].tensor;
    const Tensor& g = *grads[s].tensor;
    if (!p.same_shape(g)) throw_shape("Adam: grad shape mismatch at " + params[s].name);
    Tensor& m = m_[s];
    Tensor& v = v_[s];
    const std::int64_t n = p.size();
#pragma omp parallel for schedule(static) if (n >= 16384)
    for (std::int64_t i = 0; i < n; ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

LossValues train_step(const TrainBatch& batch, Model& model, Adam& opt, const TrainSpec& spec) {
  if (batch.images.empty()) throw_shape("train_step: empty batch");
  const int g = model.grid();

  Tensor f_in = encode(batch.images, *model.encoder);
  Tensor f_t;
  if (spec.objective == Objective::Regression) {
    f_t = build_target_features(batch.images, batch.masks, *model.encoder, spec.target_mode);
  }

  UfltCache cache;
  Tensor f_r = uflt_forward(f_in, model.uflt, g, g, &cache);
  Tensor logits = decode_mask(f_r, model.decoder, model.patch(), g, g);
  Tensor gt = masks_to_tensor(batch.masks);

  Tensor d_f_r, d_logits;
  // Throws (leaving parameters untouched) if anything went non-finite.
  const LossValues loss =
      total_loss_backward(f_r, f_t, logits, gt, spec.weights, spec.objective, d_f_r, d_logits);

  UfltParams uflt_grads = make_grads(model.uflt);
  DecoderParams dec_grads(model.uflt.cfg.dim, model.patch());
  Tensor d_f_r_total =
      decode_mask_backward(d_logits, f_r, model.decoder, model.patch(), g, g, dec_grads);
  if (spec.objective == Objective::Regression) {
    for (std::int64_t i = 0; i < d_f_r_total.size(); ++i) d_f_r_total[i] += d_f_r[i];
  }
  uflt_backward(d_f_r_total, cache, model.uflt, uflt_grads);

  std::vector<NamedParam> params, grads;
  collect(model.uflt, "uflt", params);
  collect(model.decoder.fc, "decoder.fc", params);
  collect(uflt_grads, "uflt", grads);
  collect(dec_grads.fc, "decoder.fc", grads);
  opt.step(params, grads);
  return loss;
}

namespace {

struct LoadedRecord {
  Image image;
  BinaryMask mask;
};

}  // namespace

TrainResult train_loop(const TrainSpec& spec, Model& model, const DatasetManifest& manifest,
                       const std::string& out_dir) {
  if (manifest.empty()) throw_config("train_loop: empty manifest");
  if (spec.batch < 1 || spec.steps < 1) throw_config("train_loop: bad batch/steps");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw_io("cannot create out dir: " + out_dir);
  {
    // Fail up front if the directory is not writable.
    const auto probe = fs::path(out_dir) / ".write_probe";
    std::ofstream p(probe);
    if (!p) throw_io("out dir not writable: " + out_dir);
    p.close();
    fs::remove(probe);
  }

  const std::uint64_t enc_checksum = model.encoder->param_checksum();

  // Desk scale: load the whole manifest once, in manifest order.
  std::vector<LoadedRecord> data;
  data.reserve(manifest.size());
  for (const auto& rec : manifest) {
    LoadedRecord lr;
    lr.image = load_image(rec.image_path, spec.image_size);
    lr.mask = rec.mask_path.empty() ? BinaryMask(spec.image_size, spec.image_size)
                                    : load_mask(rec.mask_path, spec.image_size);
    data.push_back(std::move(lr));
  }

  TrainResult res;
  res.loss_log_path = (fs::path(out_dir) / "loss_log.csv").string();
  std::ofstream log(res.loss_log_path, std::ios::binary);
  if (!log) throw_io("cannot write loss log");
  log << "step,total,l2,bce,iou\n";

  Adam opt(spec.lr);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();  // forces a shuffle on first use
  std::uint64_t epoch = 0;
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.gifl").string();
  nlohmann::json meta;
  meta["seed"] = spec.seed;

  for (int step = 1; step <= spec.steps; ++step) {
    TrainBatch batch;
    for (int b = 0; b < spec.batch; ++b) {
      if (cursor >= order.size()) {
        Rng rng = Rng::derive(spec.seed, 0x51f5ULL + epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
          const auto j = rng.next_below(i);
          std::swap(order[i - 1], order[static_cast<std::size_t>(j)]);
        }
        cursor = 0;
        ++epoch;
      }
      const auto& lr = data[order[cursor++]];
      batch.images.push_back(lr.image);
      batch.masks.push_back(lr.mask);
    }
    const LossValues loss = train_step(batch, model, opt, spec);
    res.losses.push_back(loss);
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%.10e,%.10e,%.10e,%.10e\n", step, loss.total, loss.l2,
                  loss.bce, loss.iou);
    log << line;

    if (spec.checkpoint_every > 0 && step % spec.checkpoint_every == 0 && step != spec.steps) {
      meta["step"] = step;
      save_model(model, ckpt_path, meta);
    }
  }
  log.close();

  if (model.encoder->param_checksum() != enc_checksum) {
    throw_numeric("frozen encoder changed during training");
  }

  meta["step"] = spec.steps;
  save_model(model, ckpt_path, meta);
  res.checkpoint_path = ckpt_path;
  return res;
}

}  // namespace gifl
