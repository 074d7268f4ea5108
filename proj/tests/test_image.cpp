#include <doctest.h>

#include <fstream>

#include "gifl/error.hpp"
#include "gifl/image.hpp"
#include "gifl/rng.hpp"
#include "testutil.hpp"

using namespace gifl;

TEST_SUITE_BEGIN("image");

TEST_CASE("all-black png decodes to zeros") {
  testutil::TempDir td("img_black");
  Image black(448, 448);
  save_png(black, td.file("black.png"));
  Image got = load_image(td.file("black.png"), 448);
  CHECK(got.height == 448);
  CHECK(got.width == 448);
  for (double v : got.data) CHECK(v == 0.0);
}

TEST_CASE("single white pixel survives an identity decode") {
  testutil::TempDir td("img_white");
  Image img(2, 2);
  for (int c = 0; c < 3; ++c) img.at(0, 1, c) = 1.0;
  save_png(img, td.file("px.png"));
  Image got = load_image(td.file("px.png"), 2);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(got.at(y, x, c) == (y == 0 && x == 1 ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("text file raises an io/format error") {
  testutil::TempDir td("img_text");
  {
    std::ofstream f(td.file("not_an_image.txt"));
    f << "definitely not pixels\n";
  }
  CHECK_THROWS_AS(load_image(td.file("not_an_image.txt"), 64), Error);
  CHECK_THROWS_AS(load_image(td.file("missing.png"), 64), Error);
}

TEST_CASE("png round trip is exact to 1/255") {
  testutil::TempDir td("img_rt");
  Rng rng(11);
  Image img(32, 32);
  for (double& v : img.data) v = rng.next_double();
  save_png(img, td.file("rt.png"));
  Image got = load_image(td.file("rt.png"), 0);
  REQUIRE(got.data.size() == img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(std::abs(got.data[i] - img.data[i]) <= 1.0 / 255.0 + 1e-12);
  }
  // A second trip through is bit-stable (quantization is idempotent).
  save_png(got, td.file("rt2.png"));
  Image again = load_image(td.file("rt2.png"), 0);
  for (std::size_t i = 0; i < got.data.size(); ++i) CHECK(again.data[i] == got.data[i]);
}

TEST_CASE("mask binarization threshold sits at 128/255") {
  testutil::TempDir td("mask_thresh");
  // Build a 2x2 gray PNG holding {0,127,128,255} via a prob-mask write.
  ProbMask p(2, 2);
  p.at(0, 0) = 0.0;
  p.at(0, 1) = 127.0 / 255.0;
  p.at(1, 0) = 128.0 / 255.0;
  p.at(1, 1) = 1.0;
  save_png(p, td.file("gray.png"));
  BinaryMask m = load_mask(td.file("gray.png"), 2);
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(0, 1) == 0);
  CHECK(m.at(1, 0) == 1);
  CHECK(m.at(1, 1) == 1);
}

TEST_CASE("saturated mask loads as all ones and binarization is idempotent") {
  testutil::TempDir td("mask_sat");
  ProbMask p(8, 8);
  for (double& v : p.data) v = 1.0;
  save_png(p, td.file("sat.png"));
  BinaryMask m = load_mask(td.file("sat.png"), 8);
  for (auto v : m.data) CHECK(v == 1);

  save_png(m, td.file("again.png"));
  BinaryMask m2 = load_mask(td.file("again.png"), 8);
  CHECK(m2.data == m.data);
}

TEST_CASE("missing mask convention is an all-zero mask") {
  // Manifest-level convention: records without a mask path get zeros.
  BinaryMask zero(16, 16);
  CHECK(zero.forged_count() == 0);
}

TEST_CASE("mask_to_token_grid aggregates exactly") {
  BinaryMask m(4, 4);
  m.at(0, 0) = m.at(0, 1) = m.at(1, 0) = m.at(1, 1) = 1;  // one 2x2 forged corner
  Tensor grid = mask_to_token_grid(m, 2);
  CHECK(grid.at2(0, 0) == 1.0);
  CHECK(grid.at2(0, 1) == 0.0);
  CHECK(grid.at2(1, 0) == 0.0);
  CHECK(grid.at2(1, 1) == 0.0);

  BinaryMask ones(6, 6);
  for (auto& v : ones.data) v = 1;
  Tensor g2 = mask_to_token_grid(ones, 3);
  for (std::int64_t i = 0; i < g2.size(); ++i) CHECK(g2[i] == 1.0);

  BinaryMask half(2, 2);
  half.at(0, 0) = half.at(0, 1) = 1;
  CHECK(mask_to_token_grid(half, 2).at2(0, 0) == 0.5);

  CHECK_THROWS_AS(mask_to_token_grid(half, 3), Error);
}

TEST_CASE("token grid mass conservation on random masks") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    BinaryMask m(24, 24);
    for (auto& v : m.data) v = rng.next_bool() ? 1 : 0;
    const int patch = trial % 2 == 0 ? 4 : 3;
    Tensor grid = mask_to_token_grid(m, patch);
    double cell_sum = 0.0;
    for (std::int64_t i = 0; i < grid.size(); ++i) cell_sum += grid[i];
    CHECK(cell_sum * patch * patch == doctest::Approx(static_cast<double>(m.forged_count())).epsilon(1e-12));
  }
}

TEST_CASE("bilinear resize of a constant image is constant") {
  Image img(17, 23);
  for (double& v : img.data) v = 0.375;
  Image up = resize_bilinear(img, 64, 64);
  for (double v : up.data) CHECK(v == doctest::Approx(0.375).epsilon(1e-12));
  Image down = resize_bilinear(img, 5, 7);
  for (double v : down.data) CHECK(v == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("nearest resize keeps masks binary") {
  Rng rng(6);
  BinaryMask m(31, 19);
  for (auto& v : m.data) v = rng.next_bool() ? 1 : 0;
  BinaryMask r = resize_nearest(m, 64, 64);
  for (auto v : r.data) CHECK((v == 0 || v == 1));
}

TEST_SUITE_END();
