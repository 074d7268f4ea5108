#include <doctest.h>

#include "gifl/kernels.hpp"
#include "gifl/rng.hpp"
#include "gifl/tensor.hpp"
#include "testutil.hpp"

using namespace gifl;

TEST_SUITE_BEGIN("kernels");

TEST_CASE("rng is deterministic and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double d = r.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    CHECK(r.next_below(13) < 13);
  }
  Rng t(3);
  for (int i = 0; i < 1000; ++i) {
    CHECK(std::abs(t.next_trunc_normal(0.02)) <= 0.04);
  }
}

TEST_CASE("parallel matmul kernels match the serial reference bitwise") {
  Rng rng(1);
  for (auto [m, k, n] : {std::array<std::int64_t, 3>{7, 5, 9},
                         std::array<std::int64_t, 3>{32, 17, 64},
                         std::array<std::int64_t, 3>{1, 40, 3}}) {
    Tensor a({m, k}), b({k, n}), bt({n, k}), g({m, n});
    testutil::fill_random(a, rng);
    testutil::fill_random(b, rng);
    testutil::fill_random(bt, rng);
    testutil::fill_random(g, rng);

    Tensor c1({m, n}), c2({m, n});
    kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
    serial::matmul(a.data(), b.data(), c2.data(), m, k, n);
    for (std::int64_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);

    kernels::matmul_nt(a.data(), bt.data(), c1.data(), m, k, n);
    serial::matmul_nt(a.data(), bt.data(), c2.data(), m, k, n);
    for (std::int64_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);

    Tensor w1({k, n}), w2({k, n});
    Tensor x({m, k});
    testutil::fill_random(x, rng);
    kernels::matmul_tn(x.data(), g.data(), w1.data(), m, k, n);
    serial::matmul_tn(x.data(), g.data(), w2.data(), m, k, n);
    for (std::int64_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == w2[i]);
  }
}

TEST_CASE("layernorm/softmax/gelu match the serial reference bitwise") {
  Rng rng(2);
  const std::int64_t rows = 37, dim = 24;
  Tensor x({rows, dim}), gain({dim}), bias({dim});
  testutil::fill_random(x, rng, 3.0);
  testutil::fill_random(gain, rng);
  testutil::fill_random(bias, rng);

  Tensor y1({rows, dim}), y2({rows, dim});
  kernels::layernorm_rows(x.data(), gain.data(), bias.data(), y1.data(), nullptr, nullptr, rows, dim, 1e-5);
  serial::layernorm_rows(x.data(), gain.data(), bias.data(), y2.data(), nullptr, nullptr, rows, dim, 1e-5);
  for (std::int64_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);

  kernels::softmax_rows(x.data(), y1.data(), rows, dim);
  serial::softmax_rows(x.data(), y2.data(), rows, dim);
  for (std::int64_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);

  kernels::gelu(x.data(), y1.data(), x.size());
  serial::gelu(x.data(), y2.data(), x.size());
  for (std::int64_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);

  CHECK(kernels::det_sum(x.data(), x.size()) == serial::sum(x.data(), x.size()));
}

TEST_CASE("det_sum is stable across thread counts") {
  Rng rng(3);
  Tensor x({100000});
  testutil::fill_random(x, rng);
  const double ref = serial::sum(x.data(), x.size());
  for (int t : {1, 2, 3, 8}) {
    set_threads(t);
    CHECK(kernels::det_sum(x.data(), x.size()) == ref);
  }
  set_threads(0);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(4);
  Tensor x({50, 16}), y({50, 16});
  testutil::fill_random(x, rng, 10.0);
  kernels::softmax_rows(x.data(), y.data(), 50, 16);
  for (std::int64_t r = 0; r < 50; ++r) {
    double s = 0.0;
    for (std::int64_t j = 0; j < 16; ++j) {
      s += y.at2(r, j);
      CHECK(y.at2(r, j) >= 0.0);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_SUITE_END();
