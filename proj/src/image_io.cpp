/*
 * Copyright 2026 The attriblab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "attriblab/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <vector>

#include "attriblab/error.hpp"

namespace attriblab {

namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("unreadable_image", "cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PnmCursor {
 public:
  PnmCursor(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  // Next whitespace-delimited header integer, skipping '#' comments.
  std::size_t integer() {
    skip_space();
    std::size_t value = 0;
    bool any = false;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_++] - '0');
      any = true;
      if (value > (1u << 30)) break;
    }
    if (!any) throw Error("unreadable_image", "malformed PNM header in " + path_.string());
    return value;
  }

  // Exactly one whitespace byte separates the header from binary data.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error("unreadable_image", "malformed PNM header in " + path_.string());
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 2;
};

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 2 || bytes[0] != 'P') throw Error("unreadable_image", "not a PNM file: " + path.string());
  const char magic = static_cast<char>(bytes[1]);
  if (magic != '2' && magic != '3' && magic != '5' && magic != '6') {
    throw Error("unreadable_image", "unsupported PNM variant P" + std::string(1, magic) + ": " + path.string());
  }
  const bool colour = magic == '3' || magic == '6';
  const bool binary = magic == '5' || magic == '6';
  PnmCursor cur(bytes, path);
  const std::size_t width = cur.integer();
  const std::size_t height = cur.integer();
  const std::size_t maxval = cur.integer();
  if (width == 0 || height == 0) throw Error("unreadable_image", "zero-extent image: " + path.string());
  if (maxval == 0 || maxval > 65535) throw Error("unreadable_image", "bad maxval in " + path.string());

  const std::size_t channels = colour ? 3 : 1;
  const std::size_t samples = width * height * channels;
  std::vector<double> raw(samples);
  if (binary) {
    cur.end_header();
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (bytes.size() - cur.pos() < samples * bps) throw Error("unreadable_image", "truncated image data: " + path.string());
    const unsigned char* p = bytes.data() + cur.pos();
    for (std::size_t i = 0; i < samples; ++i) {
      raw[i] = bps == 2 ? static_cast<double>((p[2 * i] << 8) | p[2 * i + 1]) : static_cast<double>(p[i]);
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i) raw[i] = static_cast<double>(cur.integer());
  }

  Tensor img({height, width});
  for (std::size_t i = 0; i < height * width; ++i) {
    img[i] = colour ? kLumaR * raw[3 * i] + kLumaG * raw[3 * i + 1] + kLumaB * raw[3 * i + 2] : raw[i];
  }
  return img;
}

Tensor read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw Error("unreadable_image", "cannot open image " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("unreadable_image", "libpng initialisation failed");
  }
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, colour_type = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("unreadable_image", "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  colour_type = png_get_color_type(png, info);
  bit_depth = png_get_bit_depth(png, info);
  if (colour_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colour_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  if (width == 0 || height == 0) throw Error("unreadable_image", "zero-extent image: " + path.string());
  const std::size_t bps = bit_depth == 16 ? 2 : 1;
  auto sample = [&](std::size_t y, std::size_t idx) {
    const png_byte* p = pixels.data() + y * stride + idx * bps;
    return bps == 2 ? static_cast<double>((p[0] << 8) | p[1]) : static_cast<double>(p[0]);
  };
  Tensor img({height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t base = x * static_cast<std::size_t>(channels);
      img.at(y, x) = channels >= 3 ? kLumaR * sample(y, base) + kLumaG * sample(y, base + 1) +
                                         kLumaB * sample(y, base + 2)
                                   : sample(y, base);
    }
  }
  return img;
}

Tensor read_image(const std::filesystem::path& path) {
  const auto ext = lowercase_extension(path);
  if (ext == ".png") return read_png(path);
  return read_pnm(path);
}

std::string encode_pgm(std::size_t height, std::size_t width, std::span<const std::uint8_t> pixels) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

namespace {

void require_2d(const Tensor& image) {
  if (image.rank() != 2 && !(image.rank() == 3 && image.extent(0) == 1)) {
    throw Error("shape_mismatch", "PGM export needs an H x W image, got " + shape_string(image.shape()));
  }
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io_error", "failed writing " + path.string());
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  require_2d(image);
  const std::size_t h = image.extent(image.rank() - 2), w = image.extent(image.rank() - 1);
  std::vector<std::uint8_t> px(h * w);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::clamp(std::lround(image[i]), 0L, 255L));
  }
  write_bytes(path, encode_pgm(h, w, px));
}

void write_pgm16(const std::filesystem::path& path, const Tensor& image) {
  require_2d(image);
  const std::size_t h = image.extent(image.rank() - 2), w = image.extent(image.rank() - 1);
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
  for (std::size_t i = 0; i < h * w; ++i) {
    const long v = std::clamp(std::lround(image[i]), 0L, 65535L);
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
  }
  write_bytes(path, out);
}

}  // namespace attriblab
