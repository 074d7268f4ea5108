#include "gifl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gifl/error.hpp"

namespace fs = std::filesystem;

namespace gifl {

void write_manifest(const DatasetManifest& records, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_io("cannot write manifest: " + path);
  for (const auto& r : records) {
    f << r.image_path << '\t' << (r.mask_path.empty() ? "-" : r.mask_path) << '\t'
      << (r.forged ? "forged" : "authentic") << '\t' << r.method_tag << '\t' << r.split << '\n';
  }
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw_io("cannot open manifest: " + path);
  DatasetManifest out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    DatasetRecord r;
    std::string mask, label;
    if (!std::getline(ss, r.image_path, '\t') || !std::getline(ss, mask, '\t') ||
        !std::getline(ss, label, '\t') || !std::getline(ss, r.method_tag, '\t') ||
        !std::getline(ss, r.split, '\t')) {
      throw_format("manifest line " + std::to_string(lineno) + " is malformed");
    }
    r.mask_path = mask == "-" ? "" : mask;
    if (label == "forged") {
      r.forged = true;
    } else if (label == "authentic") {
      r.forged = false;
    } else {
      throw_format("manifest line " + std::to_string(lineno) + ": unknown label " + label);
    }
    out.push_back(std::move(r));
  }
  return out;
}

BinaryMask rotate90(const BinaryMask& m, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0) return m;
  if (q == 2) {
    BinaryMask out(m.height, m.width);
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) out.at(m.height - 1 - y, m.width - 1 - x) = m.at(y, x);
    }
    return out;
  }
  BinaryMask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (q == 1) {
        out.at(x, m.height - 1 - y) = m.at(y, x);
      } else {
        out.at(m.width - 1 - x, y) = m.at(y, x);
      }
    }
  }
  return out;
}

BinaryMask flip(const BinaryMask& m, bool horizontal, bool vertical) {
  BinaryMask out(m.height, m.width);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      out.at(vertical ? m.height - 1 - y : y, horizontal ? m.width - 1 - x : x) = m.at(y, x);
    }
  }
  return out;
}

BinaryMask sample_mask(const std::vector<BinaryMask>& bank, Rng& rng) {
  if (bank.empty()) throw_config("sample_mask: empty mask bank");
  const auto idx = rng.next_below(bank.size());
  BinaryMask m = rotate90(bank[static_cast<std::size_t>(idx)], static_cast<int>(rng.next_below(4)));
  const bool h = rng.next_bool();
  const bool v = rng.next_bool();
  if (h || v) m = flip(m, h, v);
  return m;
}

const char* to_string(ForgeryMethod m) {
  switch (m) {
    case ForgeryMethod::NoiseFill: return "noise_fill";
    case ForgeryMethod::SmoothFill: return "smooth_fill";
    case ForgeryMethod::CopyMove: return "copy_move";
    case ForgeryMethod::Splice: return "splice";
  }
  return "?";
}

ForgeryMethod forgery_method_from_string(const std::string& s) {
  if (s == "noise_fill") return ForgeryMethod::NoiseFill;
  if (s == "smooth_fill") return ForgeryMethod::SmoothFill;
  if (s == "copy_move") return ForgeryMethod::CopyMove;
  if (s == "splice") return ForgeryMethod::Splice;
  throw_config("unknown forgery method: " + s);
}

namespace {

// Gaussian blur of channel c weighted by w (normalized convolution).
void gaussian_weighted(const Image& img, const std::vector<double>& weight, double sigma,
                       std::vector<double>& num, std::vector<double>& den, int c) {
  const int h = img.height, w = img.width;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  }
  std::vector<double> tmp_n(static_cast<std::size_t>(h) * w, 0.0);
  std::vector<double> tmp_d(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double n = 0.0, d = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = x + i;
        if (xx < 0 || xx >= w) continue;
        const double kv = k[static_cast<std::size_t>(i + radius)];
        const double wv = weight[static_cast<std::size_t>(y) * w + xx];
        n += kv * wv * img.at(y, xx, c);
        d += kv * wv;
      }
      tmp_n[static_cast<std::size_t>(y) * w + x] = n;
      tmp_d[static_cast<std::size_t>(y) * w + x] = d;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double n = 0.0, d = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = y + i;
        if (yy < 0 || yy >= h) continue;
        const double kv = k[static_cast<std::size_t>(i + radius)];
        n += kv * tmp_n[static_cast<std::size_t>(yy) * w + x];
        d += kv * tmp_d[static_cast<std::size_t>(yy) * w + x];
      }
      num[static_cast<std::size_t>(y) * w + x] = n;
      den[static_cast<std::size_t>(y) * w + x] = d;
    }
  }
}

// Whole-image re-encode pass for generator-style methods: a 2x resample cycle
// blended in plus 8-bit requantization, touching every pixel slightly.
Image reencode_pass(const Image& img) {
  Image low = resize_bilinear(img, std::max(1, img.height / 2), std::max(1, img.width / 2));
  Image back = resize_bilinear(low, img.height, img.width);
  Image out(img.height, img.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double v = 0.5 * img.data[i] + 0.5 * back.data[i];
    out.data[i] = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  return out;
}

}  // namespace

Image synth_forgery(const Image& img, const BinaryMask& mask, ForgeryMethod method, Rng& rng,
                    bool full_generation, const Image* donor) {
  if (img.height != mask.height || img.width != mask.width) {
    throw_shape("synth_forgery: image/mask dims differ");
  }
  if (mask.forged_count() == 0) return img;  // nothing to forge
  const int h = img.height, w = img.width;
  Image out = img;

  switch (method) {
    case ForgeryMethod::NoiseFill: {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!mask.at(y, x)) continue;
          for (int c = 0; c < 3; ++c) out.at(y, x, c) = rng.next_double();
        }
      }
      break;
    }
    case ForgeryMethod::SmoothFill: {
      std::vector<double> keep(static_cast<std::size_t>(h) * w);
      for (std::int64_t i = 0; i < mask.pixels(); ++i) {
        keep[static_cast<std::size_t>(i)] = mask.data[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
      }
      std::vector<double> num(keep.size()), den(keep.size());
      for (int c = 0; c < 3; ++c) {
        double sigma = std::max(4.0, static_cast<double>(std::max(h, w)) / 16.0);
        bool covered = false;
        for (int attempt = 0; attempt < 5 && !covered; ++attempt, sigma *= 2.0) {
          gaussian_weighted(img, keep, sigma, num, den, c);
          covered = true;
          for (int y = 0; y < h && covered; ++y) {
            for (int x = 0; x < w; ++x) {
              if (mask.at(y, x) && den[static_cast<std::size_t>(y) * w + x] < 1e-9) {
                covered = false;
                break;
              }
            }
          }
        }
        double fallback = 0.0;
        std::int64_t kept = 0;
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (!mask.at(y, x)) {
              fallback += img.at(y, x, c);
              ++kept;
            }
          }
        }
        fallback = kept > 0 ? fallback / static_cast<double>(kept) : 0.5;
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (!mask.at(y, x)) continue;
            const double d = den[static_cast<std::size_t>(y) * w + x];
            out.at(y, x, c) = d >= 1e-9 ? num[static_cast<std::size_t>(y) * w + x] / d : fallback;
          }
        }
      }
      break;
    }
    case ForgeryMethod::CopyMove: {
      // Translations drawn from the in-bounds range of the mask bbox; a
      // minimum displacement keeps the copy from degenerating to identity.
      int y0 = h, y1 = -1, x0 = w, x1 = -1;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!mask.at(y, x)) continue;
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
        }
      }
      const int dy_lo = y1 - (h - 1), dy_hi = y0;  // y-dy stays inside [0, h)
      const int dx_lo = x1 - (w - 1), dx_hi = x0;
      const int feasible = std::max(std::abs(dy_lo), std::abs(dy_hi)) +
                           std::max(std::abs(dx_lo), std::abs(dx_hi));
      const int min_shift = std::min(std::max(2, std::min(h, w) / 8), std::max(1, feasible));
      bool placed = false;
      for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
        const int dy = dy_lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(dy_hi - dy_lo + 1)));
        const int dx = dx_lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(dx_hi - dx_lo + 1)));
        if (std::abs(dy) + std::abs(dx) < min_shift) continue;
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (!mask.at(y, x)) continue;
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y - dy, x - dx, c);
          }
        }
        placed = true;
      }
      if (!placed) throw_config("copy_move: no in-bounds source window after 10 tries");
      break;
    }
    case ForgeryMethod::Splice: {
      if (!donor) throw_config("splice needs a donor image");
      Image d = *donor;
      if (d.height != h || d.width != w) d = resize_bilinear(d, h, w);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!mask.at(y, x)) continue;
          for (int c = 0; c < 3; ++c) out.at(y, x, c) = d.at(y, x, c);
        }
      }
      break;
    }
  }

  const bool generator_style =
      method == ForgeryMethod::NoiseFill || method == ForgeryMethod::SmoothFill;
  if (full_generation && generator_style) out = reencode_pass(out);
  return out;
}

Image blend_masking(const Image& forged, const Image& original, const BinaryMask& mask) {
  if (forged.height != original.height || forged.width != original.width ||
      forged.height != mask.height || forged.width != mask.width) {
    throw_shape("blend_masking: dims differ");
  }
  Image out(forged.height, forged.width);
  for (std::int64_t p = 0; p < mask.pixels(); ++p) {
    const bool m = mask.data[static_cast<std::size_t>(p)] != 0;
    for (int c = 0; c < 3; ++c) {
      out.data[static_cast<std::size_t>(p) * 3 + c] =
          m ? forged.data[static_cast<std::size_t>(p) * 3 + c]
            : original.data[static_cast<std::size_t>(p) * 3 + c];
    }
  }
  return out;
}

const char* to_string(DegradeKind k) {
  switch (k) {
    case DegradeKind::Jpeg: return "jpeg";
    case DegradeKind::ResizeCycle: return "resize_cycle";
    case DegradeKind::Sharpen: return "sharpen";
    case DegradeKind::MeanBlur: return "mean_blur";
    case DegradeKind::MotionBlur: return "motion_blur";
    case DegradeKind::Gamma: return "gamma";
    case DegradeKind::IsoNoise: return "iso_noise";
  }
  return "?";
}

DegradeKind degrade_kind_from_string(const std::string& s) {
  if (s == "jpeg") return DegradeKind::Jpeg;
  if (s == "resize_cycle") return DegradeKind::ResizeCycle;
  if (s == "sharpen") return DegradeKind::Sharpen;
  if (s == "mean_blur") return DegradeKind::MeanBlur;
  if (s == "motion_blur") return DegradeKind::MotionBlur;
  if (s == "gamma") return DegradeKind::Gamma;
  if (s == "iso_noise") return DegradeKind::IsoNoise;
  throw_config("unknown degradation: " + s);
}

namespace {

Image convolve_clamp(const Image& img, const std::vector<double>& kernel, int k) {
  const int h = img.height, w = img.width, r = k / 2;
  Image out(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int ky = 0; ky < k; ++ky) {
          const int yy = std::clamp(y + ky - r, 0, h - 1);
          for (int kx = 0; kx < k; ++kx) {
            const int xx = std::clamp(x + kx - r, 0, w - 1);
            acc += kernel[static_cast<std::size_t>(ky) * k + kx] * img.at(yy, xx, c);
          }
        }
        out.at(y, x, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace

Image degrade(const Image& img, const DegradationSpec& spec) {
  switch (spec.kind) {
    case DegradeKind::Jpeg:
      return jpeg_roundtrip(img, spec.jpeg_quality);
    case DegradeKind::ResizeCycle: {
      const int s = std::max(1, spec.resize_scale);
      Image low = resize_bilinear(img, std::max(1, img.height / s), std::max(1, img.width / s));
      return resize_bilinear(low, img.height, img.width);
    }
    case DegradeKind::Sharpen: {
      // 3x3 unsharp: center 5, 4-neighborhood -1.
      std::vector<double> k{0, -1, 0, -1, 5, -1, 0, -1, 0};
      return convolve_clamp(img, k, 3);
    }
    case DegradeKind::MeanBlur: {
      const int k = spec.blur_kernel;
      std::vector<double> kern(static_cast<std::size_t>(k) * k, 1.0 / (static_cast<double>(k) * k));
      return convolve_clamp(img, kern, k);
    }
    case DegradeKind::MotionBlur: {
      const int k = spec.blur_kernel;
      Rng rng(spec.seed ^ 0x4d4f54424cULL);
      const double theta = rng.next_double() * M_PI;
      std::vector<double> kern(static_cast<std::size_t>(k) * k, 0.0);
      const double cx = (k - 1) / 2.0, cy = (k - 1) / 2.0;
      for (int i = 0; i < k; ++i) {
        const double t = i - (k - 1) / 2.0;
        const double px = cx + t * std::cos(theta);
        const double py = cy + t * std::sin(theta);
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0, fy = py - y0;
        for (int dy = 0; dy <= 1; ++dy) {
          for (int dx = 0; dx <= 1; ++dx) {
            const int xx = x0 + dx, yy = y0 + dy;
            if (xx < 0 || xx >= k || yy < 0 || yy >= k) continue;
            kern[static_cast<std::size_t>(yy) * k + xx] += (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
          }
        }
      }
      double total = 0.0;
      for (double v : kern) total += v;
      for (double& v : kern) v /= total;
      return convolve_clamp(img, kern, k);
    }
    case DegradeKind::Gamma: {
      Image out(img.height, img.width);
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = std::pow(std::clamp(img.data[i], 0.0, 1.0), spec.gamma);
      }
      return out;
    }
    case DegradeKind::IsoNoise: {
      // Luminance noise shared across channels plus per-channel chroma noise.
      Rng rng(spec.seed ^ 0x49534fULL);
      Image out(img.height, img.width);
      const double sigma_l = 0.1 * spec.iso_intensity;
      const double sigma_c = spec.iso_color_shift;
      for (std::int64_t p = 0; p < img.pixels(); ++p) {
        const double nl = rng.next_normal() * sigma_l;
        for (int c = 0; c < 3; ++c) {
          const double nc = rng.next_normal() * sigma_c;
          out.data[static_cast<std::size_t>(p) * 3 + c] =
              std::clamp(img.data[static_cast<std::size_t>(p) * 3 + c] + nl + nc, 0.0, 1.0);
        }
      }
      return out;
    }
  }
  throw_config("unknown degradation kind");
}

MaskStats mask_stats_from_ratios(const std::vector<double>& ratios) {
  if (ratios.empty()) throw_config("mask_stats: empty list");
  MaskStats s;
  s.min = ratios[0];
  s.max = ratios[0];
  double sum = 0.0;
  for (double r : ratios) {
    sum += r;
    s.min = std::min(s.min, r);
    s.max = std::max(s.max, r);
  }
  s.mean = sum / static_cast<double>(ratios.size());
  double var = 0.0;
  for (double r : ratios) var += (r - s.mean) * (r - s.mean);
  s.variance = var / static_cast<double>(ratios.size());
  return s;
}

MaskStats mask_stats(const std::vector<BinaryMask>& masks) {
  std::vector<double> ratios;
  ratios.reserve(masks.size());
  for (const auto& m : masks) {
    ratios.push_back(static_cast<double>(m.forged_count()) / static_cast<double>(m.pixels()));
  }
  return mask_stats_from_ratios(ratios);
}

namespace {

std::vector<std::string> list_files_sorted(const std::string& dir) {
  if (!fs::is_directory(dir)) throw_config("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

std::string stats_table(const std::string& split, const MaskStats& stats) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "stat\t%s\nMean\t%.4f\nVariance\t%.4f\nMax\t%.4f\nMin\t%.4f\n", split.c_str(),
                stats.mean, stats.variance, stats.max, stats.min);
  return buf;
}

BuildDatasetResult build_dataset(const BuildDatasetConfig& cfg) {
  if (cfg.methods.empty()) throw_config("build_dataset: no methods enabled");
  if (cfg.negative_ratio.first <= 0 && cfg.negative_ratio.second > 0) {
    throw_config("build_dataset: invalid negative ratio");
  }
  if (cfg.image_size < 8) throw_config("build_dataset: image_size too small");
  const auto sources = list_files_sorted(cfg.sources_dir);
  if (sources.empty()) throw_config("build_dataset: no source images in " + cfg.sources_dir);
  const auto mask_files = list_files_sorted(cfg.masks_dir);
  if (mask_files.empty()) throw_config("build_dataset: no masks in " + cfg.masks_dir);

  std::vector<BinaryMask> bank;
  bank.reserve(mask_files.size());
  for (const auto& p : mask_files) bank.push_back(load_mask(p, 0));

  fs::create_directories(fs::path(cfg.out_dir) / "images");
  fs::create_directories(fs::path(cfg.out_dir) / "masks");

  BuildDatasetResult res;
  const int n = static_cast<int>(sources.size());
  std::vector<Image> originals;
  originals.reserve(sources.size());
  for (const auto& s : sources) originals.push_back(load_image(s, cfg.image_size));

  for (int i = 0; i < n; ++i) {
    // One mask per source, shared across every enabled method.
    Rng mask_rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(i));
    BinaryMask mask = sample_mask(bank, mask_rng);
    if (mask.height != cfg.image_size || mask.width != cfg.image_size) {
      mask = resize_nearest(mask, cfg.image_size, cfg.image_size);
    }
    const std::string mask_path =
        (fs::path(cfg.out_dir) / "masks" / (stem_of(sources[static_cast<std::size_t>(i)]) + "_mask.png"))
            .string();
    save_png(mask, mask_path);

    const Image& original = originals[static_cast<std::size_t>(i)];
    const Image& donor = originals[static_cast<std::size_t>((i + 1) % n)];
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const ForgeryMethod method = cfg.methods[mi];
      Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(i) * 64 + mi + 1);
      Image forged = synth_forgery(original, mask, method, rng, cfg.full_generation, &donor);
      if (cfg.masking) forged = blend_masking(forged, original, mask);
      const std::string img_path =
          (fs::path(cfg.out_dir) / "images" /
           (stem_of(sources[static_cast<std::size_t>(i)]) + "_" + to_string(method) + ".png"))
              .string();
      save_png(forged, img_path);
      res.manifest.push_back({img_path, mask_path, true, to_string(method), cfg.split});
      res.mask_ratios.push_back(static_cast<double>(mask.forged_count()) /
                                static_cast<double>(mask.pixels()));
    }
  }

  // Authentic negatives: sources cycled at the configured forged:authentic
  // ratio, re-encoded at the working resolution.
  const std::int64_t forged_total = static_cast<std::int64_t>(res.manifest.size());
  std::int64_t n_auth = 0;
  if (cfg.negative_ratio.second > 0) {
    n_auth = forged_total * cfg.negative_ratio.second / cfg.negative_ratio.first;
  }
  std::vector<std::string> auth_paths(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n_auth; ++j) {
    const int src = static_cast<int>(j % n);
    if (auth_paths[static_cast<std::size_t>(src)].empty()) {
      const std::string p =
          (fs::path(cfg.out_dir) / "images" /
           (stem_of(sources[static_cast<std::size_t>(src)]) + "_authentic.png"))
              .string();
      save_png(originals[static_cast<std::size_t>(src)], p);
      auth_paths[static_cast<std::size_t>(src)] = p;
    }
    res.manifest.push_back(
        {auth_paths[static_cast<std::size_t>(src)], "", false, "authentic", cfg.split});
  }

  Rng shuffle_rng = Rng::derive(cfg.seed, 0xabcd);
  for (std::size_t i = res.manifest.size(); i > 1; --i) {
    const auto j = shuffle_rng.next_below(i);
    std::swap(res.manifest[i - 1], res.manifest[static_cast<std::size_t>(j)]);
  }

  res.manifest_path = (fs::path(cfg.out_dir) / "manifest.tsv").string();
  write_manifest(res.manifest, res.manifest_path);
  res.stats = mask_stats_from_ratios(res.mask_ratios);

  std::ofstream sf(fs::path(cfg.out_dir) / "stats.tsv", std::ios::binary);
  if (!sf) throw_io("cannot write stats table");
  sf << stats_table(cfg.split, res.stats);
  return res;
}

void make_toy_sources(const std::string& dir, int count, int size, std::uint64_t seed) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i) + 0x70f0);
    Image img(size, size);
    // Smooth low-frequency color field.
    double fx[3], fy[3], ph[3], base[3];
    for (int c = 0; c < 3; ++c) {
      fx[c] = 1.0 + rng.next_double() * 3.0;
      fy[c] = 1.0 + rng.next_double() * 3.0;
      ph[c] = rng.next_double() * 2.0 * M_PI;
      base[c] = 0.3 + rng.next_double() * 0.4;
    }
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double v = base[c] + 0.25 * std::sin(2.0 * M_PI * fx[c] * x / size + ph[c]) *
                                         std::cos(2.0 * M_PI * fy[c] * y / size);
          img.at(y, x, c) = std::clamp(v, 0.0, 1.0);
        }
      }
    }
    // A few solid shapes for structure.
    const int shapes = 2 + static_cast<int>(rng.next_below(3));
    for (int s = 0; s < shapes; ++s) {
      const int cx = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size)));
      const int cy = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size)));
      const int r = size / 10 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size / 6)));
      const double col[3] = {rng.next_double(), rng.next_double(), rng.next_double()};
      const bool disc = rng.next_bool();
      for (int y = std::max(0, cy - r); y < std::min(size, cy + r); ++y) {
        for (int x = std::max(0, cx - r); x < std::min(size, cx + r); ++x) {
          if (disc && (x - cx) * (x - cx) + (y - cy) * (y - cy) > r * r) continue;
          for (int c = 0; c < 3; ++c) img.at(y, x, c) = col[c];
        }
      }
    }
    char name[64];
    std::snprintf(name, sizeof(name), "src%03d.png", i);
    save_png(img, (fs::path(dir) / name).string());
  }
}

void make_toy_mask_bank(const std::string& dir, int count, int size, std::uint64_t seed) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i) + 0x6d61);
    BinaryMask m(size, size);
    // Brush strokes: random walks with a round tip, kept away from the
    // borders so the strokes stay translatable within the frame.
    const int strokes = 1 + static_cast<int>(rng.next_below(3));
    for (int s = 0; s < strokes; ++s) {
      double x = 0.2 * size + rng.next_double() * 0.6 * size;
      double y = 0.2 * size + rng.next_double() * 0.6 * size;
      double dir = rng.next_double() * 2.0 * M_PI;
      const int steps = size / 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size)));
      const int radius =
          std::max(2, size / 16 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size / 10))));
      const double margin = radius + 2.0;
      for (int t = 0; t < steps; ++t) {
        dir += (rng.next_double() - 0.5);
        x = std::clamp(x + std::cos(dir) * 2.0, margin, size - 1.0 - margin);
        y = std::clamp(y + std::sin(dir) * 2.0, margin, size - 1.0 - margin);
        const int xi = static_cast<int>(x), yi = static_cast<int>(y);
        for (int dy = -radius; dy <= radius; ++dy) {
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = xi + dx, yy = yi + dy;
            if (xx < 0 || xx >= size || yy < 0 || yy >= size) continue;
            if (dx * dx + dy * dy <= radius * radius) m.at(yy, xx) = 1;
          }
        }
      }
    }
    char name[64];
    std::snprintf(name, sizeof(name), "mask%03d.png", i);
    save_png(m, (fs::path(dir) / name).string());
  }
}

}  // namespace gifl
