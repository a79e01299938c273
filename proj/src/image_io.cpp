// SPDX-License-Identifier: Apache-2.0
#include "reflkit/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <json.hpp>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

namespace reflkit {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

bool has_png_signature(std::FILE* f) {
  unsigned char sig[8] = {};
  size_t n = std::fread(sig, 1, 8, f);
  std::rewind(f);
  return n == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

Image from_interleaved(const std::vector<float>& buf, int h, int w, int c,
                       Encoding target) {
  Image img(h, w, c, Encoding::srgb);
  for (int ch = 0; ch < c; ++ch) {
    auto& p = img.planes[static_cast<size_t>(ch)];
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        p(i, j) = buf[(static_cast<size_t>(i) * w + j) * c + ch];
  }
  if (target == Encoding::linear) return srgb_to_linear(img);
  return img;
}

Image load_png(const std::string& path, std::FILE* f, Encoding target) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "PNG decode error");
  }
  png_init_io(png, f);
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) {
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
  }

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int c = png_get_channels(png, info);
  if ((depth != 8 && depth != 16) || (c != 1 && c != 3)) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported PNG layout (need 8/16-bit gray or RGB)");
  }

  const size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * static_cast<size_t>(h));
  rows.resize(static_cast<size_t>(h));
  for (int i = 0; i < h; ++i) rows[static_cast<size_t>(i)] = raw.data() + rowbytes * static_cast<size_t>(i);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<float> buf(static_cast<size_t>(h) * w * c);
  if (depth == 8) {
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = raw[i] / 255.0f;
  } else {
    for (size_t i = 0; i < buf.size(); ++i) {
      unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
      buf[i] = static_cast<float>(v) / 65535.0f;
    }
  }
  return from_interleaved(buf, h, w, c, target);
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::jmp_buf jmp;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  longjmp(mgr->jmp, 1);
}

Image load_jpeg(const std::string& path, std::FILE* f, Encoding target) {
  jpeg_decompress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jmp)) {
    jpeg_destroy_decompress(&cinfo);
    fail(path, "JPEG decode error");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int h = static_cast<int>(cinfo.output_height);
  const int w = static_cast<int>(cinfo.output_width);
  const int c = cinfo.output_components;
  if (c != 1 && c != 3) {
    jpeg_destroy_decompress(&cinfo);
    fail(path, "unsupported JPEG channel count");
  }
  std::vector<float> buf(static_cast<size_t>(h) * w * c);
  std::vector<JSAMPLE> row(static_cast<size_t>(w) * c);
  JSAMPROW rowp = row.data();
  while (cinfo.output_scanline < cinfo.output_height) {
    int y = static_cast<int>(cinfo.output_scanline);
    jpeg_read_scanlines(&cinfo, &rowp, 1);
    for (size_t i = 0; i < row.size(); ++i)
      buf[static_cast<size_t>(y) * w * c + i] = row[i] / 255.0f;
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(buf, h, w, c, target);
}

void write_png_bytes(const std::string& path, const std::vector<png_byte>& raw, int h, int w,
                     int color_type, int depth) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG encode error");
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int i = 0; i < h; ++i)
    rows[static_cast<size_t>(i)] = const_cast<png_bytep>(raw.data() + rowbytes * static_cast<size_t>(i));
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_image(const std::string& path, Encoding target_encoding) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(path, "cannot open file");
  if (has_png_signature(f.get())) return load_png(path, f.get(), target_encoding);
  unsigned char sig[2] = {};
  if (std::fread(sig, 1, 2, f.get()) == 2 && sig[0] == 0xFF && sig[1] == 0xD8) {
    std::rewind(f.get());
    return load_jpeg(path, f.get(), target_encoding);
  }
  fail(path, "unsupported format (need PNG or JPEG)");
}

void save_png(const std::string& path, const Image& img) {
  require(img.channels() == 1 || img.channels() == 3, "save_png: need 1 or 3 channels");
  const Image& enc = img.encoding == Encoding::linear ? linear_to_srgb(img) : img;
  const int h = enc.height(), w = enc.width(), c = enc.channels();
  std::vector<png_byte> raw(static_cast<size_t>(h) * w * c);
  for (int ch = 0; ch < c; ++ch) {
    const auto& p = enc.planes[static_cast<size_t>(ch)];
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        float v = std::clamp(p(i, j), 0.0f, 1.0f);
        raw[(static_cast<size_t>(i) * w + j) * c + ch] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
  }
  write_png_bytes(path, raw, h, w, c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, 8);
}

void save_mask_png(const std::string& path, const PlaneU8& mask) {
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  std::vector<png_byte> raw(static_cast<size_t>(h) * w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      raw[static_cast<size_t>(i) * w + j] = mask(i, j) ? 255 : 0;
  write_png_bytes(path, raw, h, w, PNG_COLOR_TYPE_GRAY, 8);
}

void save_plane16_png(const std::string& path, const PlaneF& plane) {
  const int h = static_cast<int>(plane.rows()), w = static_cast<int>(plane.cols());
  const float lo = plane.minCoeff(), hi = plane.maxCoeff();
  const float scale = hi > lo ? 1.0f / (hi - lo) : 0.0f;
  std::vector<png_byte> raw(static_cast<size_t>(h) * w * 2);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      float v = (plane(i, j) - lo) * scale;
      auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0f, 1.0f) * 65535.0f));
      raw[(static_cast<size_t>(i) * w + j) * 2] = static_cast<png_byte>(q >> 8);
      raw[(static_cast<size_t>(i) * w + j) * 2 + 1] = static_cast<png_byte>(q & 0xFF);
    }
  write_png_bytes(path, raw, h, w, PNG_COLOR_TYPE_GRAY, 16);

  nlohmann::json sidecar;
  sidecar["min"] = lo;
  sidecar["max"] = hi;
  std::filesystem::path jp(path);
  jp.replace_extension(".json");
  std::ofstream out(jp);
  if (!out) fail(jp.string(), "cannot open for writing");
  out << sidecar.dump(2) << "\n";
}

}  // namespace reflkit
