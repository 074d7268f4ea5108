#include "gifl/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "gifl/error.hpp"

namespace gifl {

std::int64_t BinaryMask::forged_count() const {
  std::int64_t n = 0;
  for (auto v : data) n += v;
  return n;
}

namespace {

inline std::uint8_t to_u8(double v) {
  double s = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(s);
}

struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 or 3
  std::vector<std::uint8_t> data;
};

bool has_png_signature(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open file: " + path);
  unsigned char sig[8] = {0};
  f.read(reinterpret_cast<char*>(sig), 8);
  if (f.gcount() < 8) return false;
  return png_sig_cmp(sig, 0, 8) == 0;
}

Raster read_png_file(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw_io("cannot open file: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw_io("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw_format("not a decodable PNG: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  Raster r;
  r.height = static_cast<int>(h);
  r.width = static_cast<int>(w);
  r.channels = channels;
  if (r.height <= 0 || r.width <= 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw_format("zero-dimension image: " + path);
  }
  r.data.resize(static_cast<std::size_t>(r.height) * r.width * channels);
  std::vector<png_bytep> rows(static_cast<std::size_t>(r.height));
  for (int y = 0; y < r.height; ++y) {
    rows[static_cast<std::size_t>(y)] = r.data.data() + static_cast<std::size_t>(y) * r.width * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return r;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

Raster read_jpeg_file(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw_io("cannot open file: " + path);
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    throw_format("not a decodable image: " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  Raster r;
  r.height = static_cast<int>(cinfo.output_height);
  r.width = static_cast<int>(cinfo.output_width);
  r.channels = 3;
  if (r.height <= 0 || r.width <= 0) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    throw_format("zero-dimension image: " + path);
  }
  r.data.resize(static_cast<std::size_t>(r.height) * r.width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = r.data.data() + static_cast<std::size_t>(cinfo.output_scanline) * r.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(fp);
  return r;
}

Raster read_raster(const std::string& path) {
  if (has_png_signature(path)) return read_png_file(path);
  return read_jpeg_file(path);
}

void write_png_gray(const std::vector<std::uint8_t>& buf, int h, int w, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw_io("cannot write file: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw_io("PNG write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(buf.data() + static_cast<std::size_t>(y) * w));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

Image load_image(const std::string& path, int target_size) {
  Raster r = read_raster(path);
  Image img(r.height, r.width);
  const double inv = 1.0 / 255.0;
  for (std::int64_t p = 0; p < img.pixels(); ++p) {
    if (r.channels == 1) {
      double v = r.data[static_cast<std::size_t>(p)] * inv;
      img.data[static_cast<std::size_t>(p) * 3 + 0] = v;
      img.data[static_cast<std::size_t>(p) * 3 + 1] = v;
      img.data[static_cast<std::size_t>(p) * 3 + 2] = v;
    } else {
      for (int c = 0; c < 3; ++c) {
        img.data[static_cast<std::size_t>(p) * 3 + c] = r.data[static_cast<std::size_t>(p) * r.channels + c] * inv;
      }
    }
  }
  if (target_size > 0 && (img.height != target_size || img.width != target_size)) {
    img = resize_bilinear(img, target_size, target_size);
  }
  return img;
}

BinaryMask load_mask(const std::string& path, int target_size) {
  Raster r = read_raster(path);
  BinaryMask m(r.height, r.width);
  for (std::int64_t p = 0; p < m.pixels(); ++p) {
    // RGB masks binarize on the red channel; gray on the single channel.
    std::uint8_t v = r.data[static_cast<std::size_t>(p) * r.channels];
    m.data[static_cast<std::size_t>(p)] = v >= 128 ? 1 : 0;
  }
  if (target_size > 0 && (m.height != target_size || m.width != target_size)) {
    m = resize_nearest(m, target_size, target_size);
  }
  return m;
}

void save_png(const Image& img, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw_io("cannot write file: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw_io("PNG write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = to_u8(img.at(y, x, c));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void save_png(const BinaryMask& mask, const std::string& path) {
  std::vector<std::uint8_t> buf(mask.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.data[i] ? 255 : 0;
  write_png_gray(buf, mask.height, mask.width, path);
}

void save_png(const ProbMask& prob, const std::string& path) {
  std::vector<std::uint8_t> buf(prob.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_u8(prob.data[i]);
  write_png_gray(buf, prob.height, prob.width, path);
}

namespace {

std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality) {
  jpeg_compress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  unsigned char* mem = nullptr;
  unsigned long mem_size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (mem) free(mem);
    throw_io("JPEG encode failed");
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &mem, &mem_size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  while (cinfo.next_scanline < cinfo.image_height) {
    int y = static_cast<int>(cinfo.next_scanline);
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = to_u8(img.at(y, x, c));
    }
    JSAMPROW rp = row.data();
    jpeg_write_scanlines(&cinfo, &rp, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(mem, mem + mem_size);
  free(mem);
  return out;
}

Image decode_jpeg(const std::vector<std::uint8_t>& buf) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw_format("JPEG decode failed");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, buf.data(), static_cast<unsigned long>(buf.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  Image img(static_cast<int>(cinfo.output_height), static_cast<int>(cinfo.output_width));
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  const double inv = 1.0 / 255.0;
  while (cinfo.output_scanline < cinfo.output_height) {
    int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW rp = row.data();
    jpeg_read_scanlines(&cinfo, &rp, 1);
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[static_cast<std::size_t>(x) * 3 + c] * inv;
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

void save_jpeg(const Image& img, const std::string& path, int quality) {
  auto buf = encode_jpeg(img, quality);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_io("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Image jpeg_roundtrip(const Image& img, int quality) { return decode_jpeg(encode_jpeg(img, quality)); }

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw_shape("resize_bilinear: non-positive target");
  Image out(out_h, out_w);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = std::clamp(y0 + 1, 0, img.height - 1);
    y0 = std::clamp(y0, 0, img.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = std::clamp(x0 + 1, 0, img.width - 1);
      x0 = std::clamp(x0, 0, img.width - 1);
      for (int c = 0; c < 3; ++c) {
        double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
        double bot = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw_shape("resize_nearest: non-positive target");
  BinaryMask out(out_h, out_w);
  const double sy = static_cast<double>(mask.height) / out_h;
  const double sx = static_cast<double>(mask.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    int yi = std::min(static_cast<int>((y + 0.5) * sy), mask.height - 1);
    for (int x = 0; x < out_w; ++x) {
      int xi = std::min(static_cast<int>((x + 0.5) * sx), mask.width - 1);
      out.at(y, x) = mask.at(yi, xi);
    }
  }
  return out;
}

Tensor mask_to_token_grid(const BinaryMask& mask, int patch) {
  if (patch <= 0 || mask.height % patch != 0 || mask.width % patch != 0) {
    throw_shape("mask_to_token_grid: mask dims not divisible by patch");
  }
  const int gh = mask.height / patch;
  const int gw = mask.width / patch;
  Tensor grid({gh, gw});
  const double inv = 1.0 / (static_cast<double>(patch) * patch);
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      std::int64_t acc = 0;
      for (int dy = 0; dy < patch; ++dy) {
        for (int dx = 0; dx < patch; ++dx) acc += mask.at(gy * patch + dy, gx * patch + dx);
      }
      grid.at2(gy, gx) = static_cast<double>(acc) * inv;
    }
  }
  return grid;
}

}  // namespace gifl
