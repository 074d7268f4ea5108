#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gifl/tensor.hpp"

namespace gifl {

// RGB image, values in [0,1]. 8-bit conversion happens only at file
// boundaries.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // h*w*3, interleaved RGB

  Image() = default;
  Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0.0) {}

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::int64_t pixels() const { return static_cast<std::int64_t>(height) * width; }
};

// 1 = forged, 0 = pristine.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // h*w

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t pixels() const { return static_cast<std::int64_t>(height) * width; }
  std::int64_t forged_count() const;
};

// Soft prediction in [0,1], one value per pixel.
struct ProbMask {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  ProbMask() = default;
  ProbMask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t pixels() const { return static_cast<std::int64_t>(height) * width; }
};

// Decodes PNG or JPEG, resizes bilinearly to target_size x target_size and
// scales to [0,1]. target_size <= 0 keeps the native resolution.
Image load_image(const std::string& path, int target_size);

// Nearest-neighbor resize, then binarize at >= 128/255.
BinaryMask load_mask(const std::string& path, int target_size);

void save_png(const Image& img, const std::string& path);
void save_png(const BinaryMask& mask, const std::string& path);
// Grayscale prob map, 8-bit.
void save_png(const ProbMask& prob, const std::string& path);
void save_jpeg(const Image& img, const std::string& path, int quality);

// In-memory JPEG round trip at the given quality (the codec pass used by the
// jpeg degradation).
Image jpeg_roundtrip(const Image& img, int quality);

Image resize_bilinear(const Image& img, int out_h, int out_w);
BinaryMask resize_nearest(const BinaryMask& mask, int out_h, int out_w);

// Per-patch mean of the mask: (H/p) x (W/p) grid in [0,1]. Dims must divide.
Tensor mask_to_token_grid(const BinaryMask& mask, int patch);

}  // namespace gifl
