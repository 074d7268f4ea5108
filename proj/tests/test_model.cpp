#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "gifl/checkpoint.hpp"
#include "gifl/error.hpp"
#include "gifl/model.hpp"
#include "testutil.hpp"

using namespace gifl;

namespace {

EncoderConfig tiny_encoder_cfg() {
  EncoderConfig cfg;
  cfg.patch = 4;
  cfg.dim = 16;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.image_size = 16;  // 4x4 token grid
  cfg.seed = 5;
  return cfg;
}

UFLTConfig tiny_uflt_cfg() {
  UFLTConfig cfg;
  cfg.layers = 2;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.patch = 4;
  cfg.seed = 9;
  return cfg;
}

Image random_image(int size, std::uint64_t seed) {
  Rng rng(seed);
  Image img(size, size);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

// Records exactly what reached the encoder; used for the target-feature and
// call-count structural checks.
class CapturingEncoder : public TinyVitEncoder {
public:
  explicit CapturingEncoder(const EncoderConfig& cfg) : TinyVitEncoder(cfg) {}

  Tensor encode(const std::vector<Image>& batch) const override {
    last_batch = batch;
    ++calls;
    return TinyVitEncoder::encode(batch);
  }

  mutable std::vector<Image> last_batch;
  mutable int calls = 0;
};

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("frozen encoder is deterministic and batch independent") {
  auto enc = make_tiny_encoder(tiny_encoder_cfg());
  Image img = random_image(16, 77);
  Tensor a = enc->encode({img});
  Tensor b = enc->encode({img});
  REQUIRE(a.same_shape(b));
  for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  Tensor two = enc->encode({img, img});
  CHECK(two.dim(0) == 2);
  for (std::int64_t t = 0; t < two.dim(1); ++t) {
    for (std::int64_t j = 0; j < two.dim(2); ++j) {
      CHECK(two.at3(0, t, j) == two.at3(1, t, j));
      CHECK(two.at3(0, t, j) == a.at3(0, t, j));
    }
  }
  CHECK(enc->param_checksum() == make_tiny_encoder(tiny_encoder_cfg())->param_checksum());
}

TEST_CASE("448/14 geometry yields 1024 patch tokens") {
  EncoderConfig cfg;
  cfg.patch = 14;
  cfg.dim = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.image_size = 448;
  auto enc = make_tiny_encoder(cfg);
  Image img(448, 448);
  Tensor f = enc->encode({img});
  CHECK(f.dim(0) == 1);
  CHECK(f.dim(1) == 1024);
  CHECK(f.dim(2) == 16);

  Image wrong(64, 64);
  CHECK_THROWS_AS(enc->encode({wrong}), Error);
}

TEST_CASE("vit-l shape encoder preset counts ~304.4M parameters") {
  EncoderConfig cfg;
  cfg.name = "vit-l";
  cfg.patch = 14;
  cfg.dim = 1024;
  cfg.layers = 24;
  cfg.heads = 16;
  cfg.image_size = 448;
  ParamCountReport rep = count_encoder_params(cfg);
  const double m = static_cast<double>(rep.total) / 1e6;
  CHECK(m > 304.4 * 0.98);
  CHECK(m < 304.4 * 1.02);
}

TEST_CASE("tiny encoder count matches its allocated parameters") {
  auto enc = make_tiny_encoder(tiny_encoder_cfg());
  std::int64_t total = 0;
  for (auto& np : enc->named_params()) total += np.tensor->size();
  CHECK(count_encoder_params(tiny_encoder_cfg()).total == total);
}

TEST_CASE("authentic target features equal the plain encoding bit for bit") {
  auto enc = make_tiny_encoder(tiny_encoder_cfg());
  Image img = random_image(16, 78);
  BinaryMask zero(16, 16);
  Tensor f_t = build_target_features({img}, {zero}, *enc, TargetMode::Authentic);
  Tensor f_i = encode({img}, *enc);
  REQUIRE(f_t.same_shape(f_i));
  for (std::int64_t i = 0; i < f_t.size(); ++i) CHECK(f_t[i] == f_i[i]);
}

TEST_CASE("full mask target equals encoding an all-zero image") {
  auto enc = make_tiny_encoder(tiny_encoder_cfg());
  Image img = random_image(16, 79);
  BinaryMask ones(16, 16);
  for (auto& v : ones.data) v = 1;
  Tensor f_t = build_target_features({img}, {ones}, *enc, TargetMode::Authentic);
  Tensor f_zero = enc->encode({Image(16, 16)});
  for (std::int64_t i = 0; i < f_t.size(); ++i) CHECK(f_t[i] == f_zero[i]);
}

TEST_CASE("encoder input is exactly img * (1 - mask) and mode variants hold") {
  CapturingEncoder cap(tiny_encoder_cfg());
  Image img = random_image(16, 80);
  BinaryMask m(16, 16);
  for (int y = 4; y < 10; ++y) {
    for (int x = 2; x < 13; ++x) m.at(y, x) = 1;
  }

  build_target_features({img}, {m}, cap, TargetMode::Authentic);
  REQUIRE(cap.last_batch.size() == 1);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double expect = img.at(y, x, c) * (m.at(y, x) ? 0.0 : 1.0);
        CHECK(cap.last_batch[0].at(y, x, c) == expect);
      }
    }
  }

  build_target_features({img}, {m}, cap, TargetMode::Forged);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      CHECK(cap.last_batch[0].at(y, x, 0) == img.at(y, x, 0) * (m.at(y, x) ? 1.0 : 0.0));
    }
  }

  build_target_features({img}, {m}, cap, TargetMode::Mask);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) CHECK(cap.last_batch[0].at(y, x, 1) == (m.at(y, x) ? 1.0 : 0.0));
  }

  build_target_features({img}, {m}, cap, TargetMode::Full);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(cap.last_batch[0].data[i] == img.data[i]);
}

TEST_CASE("zero decoder gives 0 logits and 0.5 probabilities") {
  DecoderParams dec(16, 4);
  Tensor f_r({1, 16, 16});
  Rng rng(81);
  testutil::fill_random(f_r, rng);
  dec.fc.weight.fill(0.0);
  dec.fc.bias.fill(0.0);
  Tensor logits = decode_mask(f_r, dec, 4, 4, 4);
  CHECK(logits.dim(1) == 16);
  CHECK(logits.dim(2) == 16);
  for (std::int64_t i = 0; i < logits.size(); ++i) CHECK(logits[i] == 0.0);
  ProbMask p = sigmoid_probs(logits, 0);
  for (double v : p.data) CHECK(v == 0.5);
}

TEST_CASE("decoder unshuffle maps token logits onto the right pixels") {
  DecoderParams dec(4, 2);
  dec.fc.weight.fill(0.0);
  for (std::int64_t s = 0; s < 4; ++s) dec.fc.bias[s] = static_cast<double>(s);
  Tensor f_r({1, 4, 4});  // 2x2 token grid, patch 2 -> 4x4 map
  Tensor logits = decode_mask(f_r, dec, 2, 2, 2);
  // Every token's 2x2 block reads (0 1 / 2 3).
  for (int gy = 0; gy < 2; ++gy) {
    for (int gx = 0; gx < 2; ++gx) {
      CHECK(logits.at3(0, gy * 2 + 0, gx * 2 + 0) == 0.0);
      CHECK(logits.at3(0, gy * 2 + 0, gx * 2 + 1) == 1.0);
      CHECK(logits.at3(0, gy * 2 + 1, gx * 2 + 0) == 2.0);
      CHECK(logits.at3(0, gy * 2 + 1, gx * 2 + 1) == 3.0);
    }
  }
}

TEST_CASE("thresholding probability at 0.5 equals taking the logit sign") {
  Rng rng(82);
  Tensor logits({1, 8, 8});
  testutil::fill_random(logits, rng, 4.0);
  ProbMask p = sigmoid_probs(logits, 0);
  for (std::int64_t i = 0; i < logits.size(); ++i) {
    CHECK((p.data[static_cast<std::size_t>(i)] >= 0.5) == (logits[i] >= 0.0));
  }
  // Positive scaling never flips the thresholded mask.
  for (double c : {0.25, 3.0, 17.5}) {
    for (std::int64_t i = 0; i < logits.size(); ++i) {
      const double scaled = 1.0 / (1.0 + std::exp(-logits[i] * c));
      CHECK((scaled >= 0.5) == (p.data[static_cast<std::size_t>(i)] >= 0.5));
    }
  }
}

TEST_CASE("perfect prediction gives exactly zero loss") {
  Rng rng(83);
  Tensor f_r({1, 4, 8});
  testutil::fill_random(f_r, rng);
  Tensor f_t = f_r;
  Tensor masks({1, 4, 4});
  for (std::int64_t i = 0; i < masks.size(); ++i) masks[i] = i % 3 == 0 ? 1.0 : 0.0;
  Tensor logits({1, 4, 4});
  for (std::int64_t i = 0; i < logits.size(); ++i) logits[i] = masks[i] > 0.5 ? 1000.0 : -1000.0;
  LossValues v = total_loss(f_r, f_t, logits, masks, LossWeights{}, Objective::Regression);
  CHECK(v.l2 == 0.0);
  CHECK(v.bce == 0.0);
  CHECK(v.iou == 0.0);
  CHECK(v.total == 0.0);
}

TEST_CASE("uniform 0.5 probability on an all-ones mask hits the closed forms") {
  Tensor f_r({1, 2, 4}), f_t({1, 2, 4});
  Tensor logits({1, 8, 8});
  Tensor masks({1, 8, 8});
  masks.fill(1.0);
  LossValues v = total_loss(f_r, f_t, logits, masks, LossWeights{}, Objective::Regression);
  CHECK(v.bce == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(v.iou == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(v.l2 == 0.0);
  CHECK(v.total == doctest::Approx(std::log(2.0) + 0.5).epsilon(1e-6));
}

TEST_CASE("loss components are nonnegative and iou is bounded") {
  Rng rng(84);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor f_r({1, 4, 8}), f_t({1, 4, 8}), logits({1, 8, 8}), masks({1, 8, 8});
    testutil::fill_random(f_r, rng);
    testutil::fill_random(f_t, rng);
    testutil::fill_random(logits, rng, 5.0);
    for (std::int64_t i = 0; i < masks.size(); ++i) masks[i] = rng.next_bool() ? 1.0 : 0.0;
    LossValues v = total_loss(f_r, f_t, logits, masks, LossWeights{}, Objective::Regression);
    CHECK(v.l2 >= 0.0);
    CHECK(v.bce >= 0.0);
    CHECK(v.iou >= 0.0);
    CHECK(v.iou <= 1.0);
    CHECK(v.total >= 0.0);
  }
}

TEST_CASE("classification objective drops the feature term") {
  Tensor empty;
  Tensor logits({1, 4, 4}), masks({1, 4, 4});
  logits.fill(0.3);
  masks.fill(1.0);
  LossValues v = total_loss(empty, empty, logits, masks, LossWeights{}, Objective::Classification);
  CHECK(v.l2 == 0.0);
  CHECK(v.total == doctest::Approx(v.bce + v.iou));
}

TEST_CASE("non-finite inputs raise a numeric error") {
  Tensor f_r({1, 2, 4}), f_t({1, 2, 4}), logits({1, 4, 4}), masks({1, 4, 4});
  logits[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(total_loss(f_r, f_t, logits, masks, LossWeights{}, Objective::Regression), Error);
  logits[3] = 0.0;
  f_r[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(total_loss(f_r, f_t, logits, masks, LossWeights{}, Objective::Regression), Error);
}

TEST_CASE("loss gradients wrt logits and features match finite differences") {
  Rng rng(85);
  Tensor f_r({1, 4, 8}), f_t({1, 4, 8}), logits({1, 8, 8}), masks({1, 8, 8});
  testutil::fill_random(f_r, rng);
  testutil::fill_random(f_t, rng);
  testutil::fill_random(logits, rng, 2.0);
  for (std::int64_t i = 0; i < masks.size(); ++i) masks[i] = rng.next_bool() ? 1.0 : 0.0;

  Tensor d_f_r, d_logits;
  total_loss_backward(f_r, f_t, logits, masks, LossWeights{}, Objective::Regression, d_f_r, d_logits);

  auto loss_fn = [&]() {
    return total_loss(f_r, f_t, logits, masks, LossWeights{}, Objective::Regression).total;
  };
  std::vector<NamedParam> ps{{"logits", &logits}, {"f_r", &f_r}};
  std::vector<NamedParam> gs{{"logits", &d_logits}, {"f_r", &d_f_r}};
  CHECK(testutil::max_grad_rel_err(ps, gs, loss_fn) < 1e-4);
}

TEST_CASE("predict is deterministic and scores with the max pixel probability") {
  Model model = build_model(tiny_encoder_cfg(), tiny_uflt_cfg());
  Image img = random_image(16, 86);
  Prediction a = predict(img, model);
  Prediction b = predict(img, model);
  CHECK(a.prob.data == b.prob.data);
  CHECK(a.mask.data == b.mask.data);
  CHECK(a.image_score == b.image_score);
  double mx = 0.0;
  for (double v : a.prob.data) mx = std::max(mx, v);
  CHECK(a.image_score == mx);
  for (std::size_t i = 0; i < a.prob.data.size(); ++i) {
    CHECK(a.mask.data[i] == (a.prob.data[i] >= 0.5 ? 1 : 0));
  }
}

TEST_CASE("checkpoint save/load round trips the whole model") {
  testutil::TempDir td("ckpt");
  Model model = build_model(tiny_encoder_cfg(), tiny_uflt_cfg());
  Image img = random_image(16, 87);
  Prediction before = predict(img, model);

  nlohmann::json meta;
  meta["step"] = 3;
  save_model(model, td.file("m.gifl"), meta);
  Model loaded = load_model(td.file("m.gifl"));
  CHECK(loaded.encoder->param_checksum() == model.encoder->param_checksum());
  Prediction after = predict(img, loaded);
  CHECK(before.prob.data == after.prob.data);

  // Saving the loaded model reproduces the same bytes.
  save_model(loaded, td.file("m2.gifl"), meta);
  std::ifstream f1(td.file("m.gifl"), std::ios::binary), f2(td.file("m2.gifl"), std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}

TEST_CASE("loading a non-model archive raises a version error") {
  testutil::TempDir td("badckpt");
  Tensor t({2, 2});
  std::vector<NamedParam> arrays{{"x", &t}};
  save_archive(td.file("raw.gifl"), nlohmann::json{{"format", "other"}}, arrays);
  CHECK_THROWS_AS(load_model(td.file("raw.gifl")), Error);
}

TEST_SUITE_END();
