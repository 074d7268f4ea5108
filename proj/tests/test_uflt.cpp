#include <doctest.h>

#include "gifl/error.hpp"
#include "gifl/uflt.hpp"
#include "testutil.hpp"

using namespace gifl;

namespace {

UFLTConfig tiny_cfg(UfltVariant variant = UfltVariant::Dual) {
  UFLTConfig cfg;
  cfg.layers = 2;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.ffn_ratio = 4;
  cfg.patch = 4;
  cfg.variant = variant;
  cfg.scope = SpectralScope::per_token();
  cfg.seed = 99;
  return cfg;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::int64_t total_params(UfltParams& p) {
  std::vector<NamedParam> named;
  collect(p, "uflt", named);
  std::int64_t n = 0;
  for (auto& np : named) n += np.tensor->size();
  return n;
}

}  // namespace

TEST_SUITE_BEGIN("uflt");

TEST_CASE("init is deterministic and structured") {
  UfltParams a = init_params(tiny_cfg());
  UfltParams b = init_params(tiny_cfg());
  CHECK(a.blocks.size() == 2);
  std::vector<NamedParam> na, nb;
  collect(a, "uflt", na);
  collect(b, "uflt", nb);
  REQUIRE(na.size() == nb.size());
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].name == nb[i].name);
    REQUIRE(na[i].tensor->same_shape(*nb[i].tensor));
    for (std::int64_t j = 0; j < na[i].tensor->size(); ++j) {
      CHECK((*na[i].tensor)[j] == (*nb[i].tensor)[j]);
    }
  }
  // Every bias starts at zero; norm gains at one.
  for (auto& np : na) {
    if (np.name.ends_with(".bias")) {
      for (std::int64_t j = 0; j < np.tensor->size(); ++j) CHECK((*np.tensor)[j] == 0.0);
    }
    if (np.name.ends_with("norm.gain") || np.name.ends_with("ln1.gain") ||
        np.name.ends_with("ln2.gain")) {
      for (std::int64_t j = 0; j < np.tensor->size(); ++j) CHECK((*np.tensor)[j] == 1.0);
    }
  }

  UFLTConfig other = tiny_cfg();
  other.seed = 100;
  UfltParams c = init_params(other);
  CHECK(c.blocks[0].spa.qkv.weight[0] != a.blocks[0].spa.qkv.weight[0]);
}

TEST_CASE("zero parameters with zero input propagate zeros through a dual block") {
  UFLTConfig cfg = tiny_cfg();
  UfltParams p = init_params(cfg);
  UfltBlockParams& blk = p.blocks[0];
  auto zero_linear = [](LinearParams& l) {
    l.weight.fill(0.0);
    l.bias.fill(0.0);
  };
  for (VitLayerParams* v : {&blk.spa, &blk.spe}) {
    zero_linear(v->qkv);
    zero_linear(v->proj);
    zero_linear(v->fc1);
    zero_linear(v->fc2);
  }
  zero_linear(blk.cross.compress);
  zero_linear(blk.cross.expand);

  Tensor x_spa({1, 16, 16}), x_spe({1, 16, 16});
  auto [out_spa, out_spe] =
      dual_domain_block(x_spa, x_spe, blk, cfg.scope, cfg.heads, 4, 4, nullptr);
  for (std::int64_t i = 0; i < out_spa.size(); ++i) CHECK(out_spa[i] == 0.0);
  for (std::int64_t i = 0; i < out_spe.size(); ++i) CHECK(out_spe[i] == 0.0);
}

TEST_CASE("dual block preserves stream shapes") {
  UFLTConfig cfg = tiny_cfg();
  UfltParams p = init_params(cfg);
  Rng rng(12);
  Tensor x_spa({3, 16, 16}), x_spe({3, 16, 16});
  testutil::fill_random(x_spa, rng);
  testutil::fill_random(x_spe, rng);
  auto [a, b] = dual_domain_block(x_spa, x_spe, p.blocks[0], cfg.scope, cfg.heads, 4, 4, nullptr);
  CHECK(a.same_shape(x_spa));
  CHECK(b.same_shape(x_spe));
}

TEST_CASE("zeroed cross maps reduce a dual block's spatial path to a plain ViT layer") {
  UFLTConfig cfg = tiny_cfg();
  UfltParams p = init_params(cfg);
  UfltBlockParams& blk = p.blocks[0];
  blk.cross.compress.weight.fill(0.0);
  blk.cross.compress.bias.fill(0.0);
  blk.cross.expand.weight.fill(0.0);
  blk.cross.expand.bias.fill(0.0);

  Rng rng(13);
  Tensor x_spa({2, 16, 16}), x_spe({2, 16, 16});
  testutil::fill_random(x_spa, rng);
  testutil::fill_random(x_spe, rng);
  auto [out_spa, out_spe] =
      dual_domain_block(x_spa, x_spe, blk, cfg.scope, cfg.heads, 4, 4, nullptr);
  Tensor ref = testutil::reference_vit_layer(x_spa, blk.spa, cfg.heads);
  CHECK(max_abs_diff(out_spa, ref) < 1e-9);
  (void)out_spe;
}

TEST_CASE("library ViT layer matches the reference oracle") {
  UFLTConfig cfg = tiny_cfg();
  UfltParams p = init_params(cfg);
  Rng rng(14);
  Tensor x({2, 16, 16});
  testutil::fill_random(x, rng);
  Tensor got = vit_layer_forward(x, p.blocks[1].spa, cfg.heads, nullptr);
  Tensor ref = testutil::reference_vit_layer(x, p.blocks[1].spa, cfg.heads);
  CHECK(max_abs_diff(got, ref) < 1e-9);
}

TEST_CASE("spatial-only variant equals the reference plain ViT stack") {
  UFLTConfig cfg = tiny_cfg(UfltVariant::SpatialOnly);
  UfltParams p = init_params(cfg);
  Rng rng(15);
  Tensor x({1, 16, 16});
  testutil::fill_random(x, rng);
  Tensor got = uflt_forward(x, p, 4, 4, nullptr);

  // Reference: L plain layers then the final norm.
  Tensor ref = x;
  for (const auto& blk : p.blocks) ref = testutil::reference_vit_layer(ref, blk.spa, cfg.heads);
  ref = layernorm_forward(ref, p.norm, nullptr);
  CHECK(max_abs_diff(got, ref) < 1e-9);
}

TEST_CASE("zeroing every cross map makes dual equal spatial-only exactly") {
  UFLTConfig dual_cfg = tiny_cfg(UfltVariant::Dual);
  UfltParams dual = init_params(dual_cfg);
  for (auto& blk : dual.blocks) {
    blk.cross.compress.weight.fill(0.0);
    blk.cross.compress.bias.fill(0.0);
    blk.cross.expand.weight.fill(0.0);
    blk.cross.expand.bias.fill(0.0);
  }
  dual.bridge.expand.weight.fill(0.0);
  dual.bridge.expand.bias.fill(0.0);

  UFLTConfig spa_cfg = tiny_cfg(UfltVariant::SpatialOnly);
  UfltParams spa = init_params(spa_cfg);
  for (std::size_t i = 0; i < spa.blocks.size(); ++i) spa.blocks[i].spa = dual.blocks[i].spa;
  spa.norm = dual.norm;

  Rng rng(16);
  Tensor x({2, 16, 16});
  testutil::fill_random(x, rng);
  Tensor a = uflt_forward(x, dual, 4, 4, nullptr);
  Tensor b = uflt_forward(x, spa, 4, 4, nullptr);
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("forward shape and determinism for every variant") {
  for (auto variant : {UfltVariant::Dual, UfltVariant::SpatialOnly, UfltVariant::SpectralOnly}) {
    UfltParams p = init_params(tiny_cfg(variant));
    Rng rng(17);
    Tensor x({2, 16, 16});
    testutil::fill_random(x, rng);
    Tensor a = uflt_forward(x, p, 4, 4, nullptr);
    Tensor b = uflt_forward(x, p, 4, 4, nullptr);
    CHECK(a.same_shape(x));
    for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("variant/scope inconsistency raises a config error") {
  UFLTConfig cfg = tiny_cfg(UfltVariant::SpectralOnly);
  cfg.scope = SpectralScope::token_windows(0);
  CHECK_THROWS_AS(validate(cfg), Error);
  UFLTConfig bad = tiny_cfg();
  bad.heads = 3;  // does not divide 16
  CHECK_THROWS_AS(init_params(bad), Error);
}

TEST_CASE("gradients through every variant match central finite differences") {
  // Tiny config: B=1, N=16, D=16, L=2. Scalar loss <uflt(x), r>.
  for (auto variant : {UfltVariant::Dual, UfltVariant::SpatialOnly, UfltVariant::SpectralOnly}) {
    CAPTURE(to_string(variant));
    UfltParams p = init_params(tiny_cfg(variant));
    Rng rng(18);
    Tensor x({1, 16, 16}), r({1, 16, 16});
    testutil::fill_random(x, rng);
    testutil::fill_random(r, rng);

    auto loss_fn = [&]() {
      Tensor out = uflt_forward(x, p, 4, 4, nullptr);
      double acc = 0.0;
      for (std::int64_t i = 0; i < out.size(); ++i) acc += out[i] * r[i];
      return acc;
    };

    UfltCache cache;
    uflt_forward(x, p, 4, 4, &cache);
    UfltParams grads = make_grads(p);
    uflt_backward(r, cache, p, grads);

    std::vector<NamedParam> ps, gs;
    collect(p, "uflt", ps);
    collect(grads, "uflt", gs);
    REQUIRE(ps.size() == gs.size());
    CHECK(testutil::max_grad_rel_err(ps, gs, loss_fn, 1e-5, 64) < 1e-4);
  }
}

TEST_CASE("input gradient matches finite differences") {
  UfltParams p = init_params(tiny_cfg());
  Rng rng(19);
  Tensor x({1, 16, 16}), r({1, 16, 16});
  testutil::fill_random(x, rng);
  testutil::fill_random(r, rng);

  UfltCache cache;
  uflt_forward(x, p, 4, 4, &cache);
  UfltParams grads = make_grads(p);
  Tensor dx = uflt_backward(r, cache, p, grads);

  auto loss_fn = [&]() {
    Tensor out = uflt_forward(x, p, 4, 4, nullptr);
    double acc = 0.0;
    for (std::int64_t i = 0; i < out.size(); ++i) acc += out[i] * r[i];
    return acc;
  };
  std::vector<NamedParam> ps{{"x", &x}}, gs{{"x", &dx}};
  CHECK(testutil::max_grad_rel_err(ps, gs, loss_fn) < 1e-4);
}

TEST_CASE("tiny parameter count equals the hand-computed closed form") {
  UFLTConfig cfg = tiny_cfg();
  // Per ViT layer at D=16, r=4: ln 32+32, qkv 16*48+48, proj 16*16+16,
  // fc1 16*64+64, fc2 64*16+16.
  const std::int64_t layer =
      32 + (16 * 48 + 48) + (16 * 16 + 16) + 32 + (16 * 64 + 64) + (64 * 16 + 16);
  const std::int64_t sw = 32;  // spectral width of D=16 per-token
  const std::int64_t cross = (sw * 16 + 16) + (16 * sw + sw);
  const std::int64_t expected = 2 * 2 * layer + 2 * cross + cross + 32;
  ParamCountReport rep = count_uflt_params(cfg, false, 64);
  CHECK(rep.total == expected);

  UfltParams p = init_params(cfg);
  CHECK(total_params(p) == expected);

  ParamCountReport with_dec = count_uflt_params(cfg, true, 64);
  CHECK(with_dec.total == expected + 16 * 16 + 16);
}

TEST_CASE("count matches allocation for every variant") {
  for (auto variant : {UfltVariant::Dual, UfltVariant::SpatialOnly, UfltVariant::SpectralOnly}) {
    UFLTConfig cfg = tiny_cfg(variant);
    UfltParams p = init_params(cfg);
    CHECK(count_uflt_params(cfg, false, 64).total == total_params(p));
  }
}

TEST_CASE("dual count decomposes into streams, cross maps and final norm") {
  UFLTConfig cfg = tiny_cfg();
  ParamCountReport dual = count_uflt_params(cfg, false, 64);
  const std::int64_t single_stream =
      static_cast<std::int64_t>(cfg.layers) * vit_layer_param_count(cfg.dim, cfg.ffn_ratio);
  std::int64_t cross_total = 0;
  for (const auto& it : dual.items) {
    if (it.component.starts_with("cross_maps") || it.component.starts_with("bridge")) {
      cross_total += it.params;
    }
  }
  CHECK(dual.total == 2 * single_stream + cross_total + 2 * cfg.dim);
}

TEST_CASE("dual UFLT-L predictor with decoder lands near the published size") {
  UFLTConfig big;
  big.layers = 24;
  big.dim = 1024;
  big.heads = 16;
  big.ffn_ratio = 4;
  big.patch = 14;
  big.variant = UfltVariant::Dual;
  big.scope = SpectralScope::per_token();
  ParamCountReport rep = count_uflt_params(big, true, 448);
  const double m = static_cast<double>(rep.total) / 1e6;
  CHECK(m > 718.0 * 0.95);
  CHECK(m < 718.0 * 1.05);
}

TEST_SUITE_END();
