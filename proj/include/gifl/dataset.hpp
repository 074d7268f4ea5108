#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gifl/image.hpp"
#include "gifl/rng.hpp"

namespace gifl {

struct DatasetRecord {
  std::string image_path;
  std::string mask_path;  // empty = authentic (all-zero ground truth)
  bool forged = false;
  std::string method_tag;
  std::string split = "train";
};

using DatasetManifest = std::vector<DatasetRecord>;

// Tab-separated, one record per line, "-" for an absent mask.
void write_manifest(const DatasetManifest& records, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// Uniform bank pick, rotation in {0,90,180,270} degrees, then horizontal and
// vertical flips with p=0.5 each.
BinaryMask sample_mask(const std::vector<BinaryMask>& bank, Rng& rng);
BinaryMask rotate90(const BinaryMask& m, int quarter_turns);
BinaryMask flip(const BinaryMask& m, bool horizontal, bool vertical);

enum class ForgeryMethod { NoiseFill, SmoothFill, CopyMove, Splice };

const char* to_string(ForgeryMethod m);
ForgeryMethod forgery_method_from_string(const std::string& s);

// Desk-scale stand-ins for generative editors. Pixels outside the mask are
// untouched unless full_generation is set, which adds a whole-image re-encode
// pass (resample + requantize) for the generator-style methods (noise/smooth)
// so the output mimics a fully generated frame. Splice needs a donor.
Image synth_forgery(const Image& img, const BinaryMask& mask, ForgeryMethod method, Rng& rng,
                    bool full_generation, const Image* donor);

// out = mask * forged + (1 - mask) * original.
Image blend_masking(const Image& forged, const Image& original, const BinaryMask& mask);

enum class DegradeKind { Jpeg, ResizeCycle, Sharpen, MeanBlur, MotionBlur, Gamma, IsoNoise };

const char* to_string(DegradeKind k);
DegradeKind degrade_kind_from_string(const std::string& s);

struct DegradationSpec {
  DegradeKind kind = DegradeKind::Jpeg;
  int jpeg_quality = 25;
  int resize_scale = 2;
  int blur_kernel = 7;
  double gamma = 1.5;
  double iso_color_shift = 0.05;
  double iso_intensity = 0.8;
  std::uint64_t seed = 0;
};

Image degrade(const Image& img, const DegradationSpec& spec);

struct MaskStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double max = 0.0;
  double min = 0.0;
};

MaskStats mask_stats(const std::vector<BinaryMask>& masks);
MaskStats mask_stats_from_ratios(const std::vector<double>& ratios);

struct BuildDatasetConfig {
  std::string sources_dir;
  std::string masks_dir;
  std::string out_dir;
  std::vector<ForgeryMethod> methods{ForgeryMethod::NoiseFill, ForgeryMethod::SmoothFill,
                                     ForgeryMethod::CopyMove, ForgeryMethod::Splice};
  // forged : authentic parts; {1,0} disables negatives.
  std::pair<int, int> negative_ratio{1, 1};
  bool masking = false;
  bool full_generation = true;
  int image_size = 448;
  std::string split = "train";
  std::uint64_t seed = 0;
};

struct BuildDatasetResult {
  DatasetManifest manifest;
  std::string manifest_path;
  MaskStats stats;
  std::vector<double> mask_ratios;
};

// One forged record per (source, method), the same mask shared across the
// methods of a source; authentic records appended at the negative ratio;
// deterministic shuffle; manifest + per-split stats written under out_dir.
BuildDatasetResult build_dataset(const BuildDatasetConfig& cfg);

std::string stats_table(const std::string& split, const MaskStats& stats);

// Procedural toy corpus (smooth color fields plus simple shapes) and brush-
// stroke style mask bank; keeps the pipeline runnable without external data.
void make_toy_sources(const std::string& dir, int count, int size, std::uint64_t seed);
void make_toy_mask_bank(const std::string& dir, int count, int size, std::uint64_t seed);

}  // namespace gifl
