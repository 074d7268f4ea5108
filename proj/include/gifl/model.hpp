#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gifl/encoder.hpp"
#include "gifl/image.hpp"
#include "gifl/uflt.hpp"

namespace gifl {

// One-layer mask decoder: D logits -> patch^2 logits per token, unshuffled to
// pixel resolution.
struct DecoderParams {
  LinearParams fc;

  DecoderParams() = default;
  DecoderParams(std::int64_t dim, int patch)
      : fc(dim, static_cast<std::int64_t>(patch) * patch) {}
};

DecoderParams init_decoder(std::int64_t dim, int patch, std::uint64_t seed);

enum class TargetMode { Authentic, Mask, Full, Forged };
enum class Objective { Regression, Classification };

const char* to_string(TargetMode m);
TargetMode target_mode_from_string(const std::string& s);

// F_I = E(I): frozen, patch tokens only.
Tensor encode(const std::vector<Image>& imgs, const FrozenEncoder& enc);

// Regression target per mode; Authentic is E(I * (1 - M)).
Tensor build_target_features(const std::vector<Image>& imgs, const std::vector<BinaryMask>& masks,
                             const FrozenEncoder& enc, TargetMode mode);

// f_r: B x N x D -> logit map B x H x W (H = grid_h * patch).
Tensor decode_mask(const Tensor& f_r, const DecoderParams& dec, int patch, int grid_h, int grid_w);
// Returns grad wrt f_r, accumulates decoder grads.
Tensor decode_mask_backward(const Tensor& d_logits, const Tensor& f_r, const DecoderParams& dec,
                            int patch, int grid_h, int grid_w, DecoderParams& grads);

ProbMask sigmoid_probs(const Tensor& logits, std::int64_t batch_index);

struct LossWeights {
  double l2 = 10.0;
  double bce = 1.0;
  double iou = 1.0;
};

struct LossValues {
  double total = 0.0;
  double l2 = 0.0;
  double bce = 0.0;
  double iou = 0.0;
};

// Composite objective: weighted feature-reconstruction L2 + pixel BCE + soft
// IoU. Classification mode drops the L2 term (f_r/f_t may be empty).
// masks: B x H x W tensor of {0,1}.
LossValues total_loss(const Tensor& f_r, const Tensor& f_t, const Tensor& logits,
                      const Tensor& masks, const LossWeights& w, Objective objective);

// d_f_r and d_logits are overwritten with gradients of the total loss.
LossValues total_loss_backward(const Tensor& f_r, const Tensor& f_t, const Tensor& logits,
                               const Tensor& masks, const LossWeights& w, Objective objective,
                               Tensor& d_f_r, Tensor& d_logits);

Tensor masks_to_tensor(const std::vector<BinaryMask>& masks);

// Full assembled model.
struct Model {
  EncoderConfig encoder_cfg;
  std::unique_ptr<TinyVitEncoder> encoder;
  UfltParams uflt;
  DecoderParams decoder;

  int patch() const { return encoder_cfg.patch; }
  int grid() const { return encoder_cfg.grid(); }
};

Model build_model(const EncoderConfig& enc_cfg, const UFLTConfig& uflt_cfg);

struct Prediction {
  ProbMask prob;
  BinaryMask mask;       // prob >= 0.5
  double image_score;    // max pixel probability
};

Prediction predict(const Image& img, const Model& model);

nlohmann::json model_config_json(const Model& model);
void save_model(const Model& model, const std::string& path, const nlohmann::json& extra_meta);
Model load_model(const std::string& path);

}  // namespace gifl
