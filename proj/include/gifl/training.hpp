#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gifl/dataset.hpp"
#include "gifl/model.hpp"

namespace gifl {

struct TrainSpec {
  Objective objective = Objective::Regression;
  TargetMode target_mode = TargetMode::Authentic;
  double lr = 1e-4;
  int batch = 8;
  int steps = 100;
  std::pair<int, int> negative_ratio{1, 1};  // forged : authentic
  bool masking = false;
  int image_size = 448;
  std::uint64_t seed = 0;
  LossWeights weights;  // (10, 1, 1)
  int checkpoint_every = 100;
};

// Experiment matrix: "baseline", the architecture/objective options "I".."IX"
// and the data-study options "data-VI".."data-XI". Adjusts the given spec and
// UFLT config in place.
void apply_ablation(const std::string& option, TrainSpec& spec, UFLTConfig& cfg);

struct AblationConfig {
  TrainSpec spec;
  UFLTConfig uflt;
};

// Convenience wrapper over apply_ablation starting from defaults.
AblationConfig ablation_config(const std::string& option);

std::vector<std::string> ablation_option_names();

// Adam with bias correction; state slots keyed by parameter order.
class Adam {
public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(const std::vector<NamedParam>& params, const std::vector<NamedParam>& grads);

  double lr() const { return lr_; }
  std::int64_t t() const { return t_; }

private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct TrainBatch {
  std::vector<Image> images;
  std::vector<BinaryMask> masks;
};

// One optimization step over UFLT + decoder; the encoder stays untouched.
// Throws a numeric error (with parameters unchanged) on a non-finite loss.
LossValues train_step(const TrainBatch& batch, Model& model, Adam& opt, const TrainSpec& spec);

struct TrainResult {
  std::string checkpoint_path;
  std::string loss_log_path;
  std::vector<LossValues> losses;
};

// Seeded shuffling, fixed-size batches cycling through the manifest, loss CSV
// log, periodic + final checkpoints.
TrainResult train_loop(const TrainSpec& spec, Model& model, const DatasetManifest& manifest,
                       const std::string& out_dir);

}  // namespace gifl
