#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gifl/image.hpp"
#include "gifl/uflt.hpp"
#include "gifl/vit.hpp"

namespace gifl {

struct EncoderConfig {
  std::string name = "tiny-vit";
  int patch = 8;
  std::int64_t dim = 32;
  int layers = 2;
  int heads = 4;
  int ffn_ratio = 4;
  int image_size = 64;  // pos embeddings are sized for this resolution
  std::uint64_t seed = 7;

  int grid() const { return image_size / patch; }
  std::int64_t tokens() const { return static_cast<std::int64_t>(grid()) * grid(); }
};

// Feature extractor whose parameters never change during a run. The same
// instance encodes both the input features and the regression targets.
class FrozenEncoder {
public:
  virtual ~FrozenEncoder() = default;
  virtual const EncoderConfig& config() const = 0;
  // Patch tokens only (no class token), B x N x D.
  virtual Tensor encode(const std::vector<Image>& batch) const = 0;
  virtual std::uint64_t param_checksum() const = 0;
};

// ViT with class token, learned position embeddings and a final norm; random
// init from the seed, then frozen. Stands in for a pretrained backbone at
// desk scale.
class TinyVitEncoder : public FrozenEncoder {
public:
  explicit TinyVitEncoder(const EncoderConfig& cfg);
  TinyVitEncoder(const EncoderConfig& cfg, LinearParams patch_embed, Tensor cls, Tensor pos,
                 std::vector<VitLayerParams> blocks, LayerNormParams norm);

  const EncoderConfig& config() const override { return cfg_; }
  Tensor encode(const std::vector<Image>& batch) const override;
  std::uint64_t param_checksum() const override;

  // Named views for checkpointing (parameters stay frozen; the collect is for
  // serialization only).
  std::vector<NamedParam> named_params();

private:
  EncoderConfig cfg_;
  LinearParams patch_embed_;  // p*p*3 -> D
  Tensor cls_;                // D
  Tensor pos_;                // (N+1) x D
  std::vector<VitLayerParams> blocks_;
  LayerNormParams norm_;
};

std::unique_ptr<TinyVitEncoder> make_tiny_encoder(const EncoderConfig& cfg);

// Tiny frozen encoder whose patch embedding is an analytic 2-D DCT
// filterbank (luma plus R-B chroma planes) instead of a random projection;
// the transformer layers stay as the seeded near-identity mixing. Gives the
// desk-scale pipeline a texture-meaningful frozen feature space. Requires
// dim <= 2 * patch^2.
std::unique_ptr<TinyVitEncoder> make_dct_encoder(const EncoderConfig& cfg);

// Rebuild an encoder from `encoder.*` arrays plus the `encoder` meta object
// of an archive (the hook for externally supplied pretrained weights).
std::unique_ptr<TinyVitEncoder> encoder_from_arrays(
    const EncoderConfig& cfg, const std::map<std::string, Tensor>& arrays);

ParamCountReport count_encoder_params(const EncoderConfig& cfg);

}  // namespace gifl
