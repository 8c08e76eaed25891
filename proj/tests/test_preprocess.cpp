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

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"

#include "attriblab/error.hpp"
#include "attriblab/image_io.hpp"
#include "attriblab/preprocess.hpp"

using namespace attriblab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("attriblab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_gray_png(const fs::path& path, std::size_t h, std::size_t w, const std::vector<std::uint8_t>& px) {
  FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < h; ++r) png_write_row(png, px.data() + r * w);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

TEST_CASE("aspect-preserving resize arithmetic") {
  CHECK(resize_bicubic(Tensor({1000, 750}, 3.0), 512).shape() == Shape{512, 384});
  CHECK(resize_bicubic(Tensor({750, 1000}, 3.0), 512).shape() == Shape{384, 512});
  CHECK(resize_bicubic(Tensor({1000, 1}, 3.0), 64).shape() == Shape{64, 1});
}

TEST_CASE("resizing a constant image keeps it constant") {
  for (auto [r, c] : {std::pair{3, 17}, {40, 9}, {1, 1}}) {
    const Tensor out = resize_bicubic_to(Tensor({7, 5}, 42.0), r, c);
    for (double v : out.values()) CHECK(v == doctest::Approx(42.0).epsilon(1e-14));
  }
}

TEST_CASE("bicubic upsampling matches a direct kernel-sum oracle") {
  Tensor ramp({4, 4});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) ramp.at(y, x) = static_cast<double>(4 * y + x);
  const Tensor up = resize_bicubic_to(ramp, 8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) CHECK(std::abs(up.at(y, x) - oracle::direct_bicubic(ramp, 8, 8, y, x)) < 1e-9);

  Rng rng(3);
  const Tensor noise = oracle::random_tensor({9, 6}, rng, 0, 255);
  const Tensor down = resize_bicubic_to(noise, 5, 11);
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 11; ++x) CHECK(std::abs(down.at(y, x) - oracle::direct_bicubic(noise, 5, 11, y, x)) < 1e-9);
}

TEST_CASE("Keys kernel values") {
  CHECK(bicubic_kernel(0.0) == 1.0);
  CHECK(bicubic_kernel(1.0) == 0.0);
  CHECK(bicubic_kernel(2.0) == 0.0);
  CHECK(bicubic_kernel(0.5) == doctest::Approx(oracle::keys(0.5)));
  CHECK(bicubic_kernel(-1.5) == doctest::Approx(oracle::keys(1.5)));
}

TEST_CASE("padding to a square") {
  const PaddedImage wide = pad_to_square(Tensor({512, 384}, 1.0), 512);
  CHECK(wide.left == 64);
  CHECK(wide.top == 0);
  CHECK(wide.image.at(100, 63) == 0.0);
  CHECK(wide.image.at(100, 64) == 1.0);
  CHECK(wide.image.at(100, 447) == 1.0);
  CHECK(wide.image.at(100, 448) == 0.0);

  const PaddedImage odd = pad_to_square(Tensor({512, 511}, 1.0), 512);
  CHECK(odd.left == 0);
  CHECK(odd.image.at(0, 510) == 1.0);
  CHECK(odd.image.at(0, 511) == 0.0);
  CHECK_FALSE(odd.foreground[511]);

  Tensor sq({4, 4});
  for (std::size_t i = 0; i < 16; ++i) sq[i] = static_cast<double>(i);
  const PaddedImage same = pad_to_square(sq, 4);
  CHECK(bit_identical(same.image, sq));
  CHECK(std::all_of(same.foreground.begin(), same.foreground.end(), [](bool b) { return b; }));
}

TEST_CASE("percentile clip and normalize") {
  std::vector<double> values(101);
  for (int i = 0; i <= 100; ++i) values[i] = i;
  CHECK(percentile(values, 1) == 1.0);
  CHECK(percentile(values, 95) == 95.0);
  CHECK(percentile({1.0, 2.0}, 50) == 1.5);

  Tensor img({1, 101});
  for (std::size_t i = 0; i <= 100; ++i) img[i] = static_cast<double>(i);
  const NormalizedImage n = clip_normalize(img, PreprocessConfig{});
  CHECK(n.low == 1.0);
  CHECK(n.high == 95.0);
  CHECK(n.image[50] == doctest::Approx(49.0 / 94.0).epsilon(1e-15));
  CHECK(n.image[0] == 0.0);
  CHECK(n.image[100] == 1.0);
}

TEST_CASE("background pixels are excluded from the percentiles") {
  const PaddedImage p = pad_to_square(Tensor({2, 4}, 7.0), 4);
  Tensor img = p.image;
  img.at(1, 0) = 10.0;  // foreground row
  const NormalizedImage n = clip_normalize(img, {4, 0.0, 100.0}, p.foreground);
  CHECK(n.low == 7.0);
  CHECK(n.high == 10.0);
  CHECK(n.image.at(0, 0) == 0.0);
  CHECK(n.image.at(1, 0) == 1.0);
}

TEST_CASE("constant image normalizes to zeros with a warning") {
  const PreprocessedImage out = preprocess(Tensor({20, 10}, 5.0), {16, 1, 95});
  CHECK(out.image.shape() == Shape{16, 16});
  CHECK(max_abs(out.image) == 0.0);
  REQUIRE(out.warnings.size() == 1);
  CHECK(out.warnings[0].rfind("constant_image", 0) == 0);
}

TEST_CASE("preprocessed values stay in [0, 1]") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 3 + rng.below(40), w = 3 + rng.below(40);
    const Tensor img = oracle::random_tensor({h, w}, rng, -1e4, 1e4);
    const PreprocessedImage out = preprocess(img, {32, rng.uniform(0, 10), rng.uniform(50, 100)});
    CHECK(out.image.shape() == Shape{32, 32});
    for (double v : out.image.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const Tensor model_in = to_model_input(out.image, 12);
    CHECK(model_in.shape() == Shape{1, 12, 12});
    CHECK(model_in.values().front() >= 0.0);
  }
}

TEST_CASE("preprocess config validation") {
  CHECK_THROWS_AS((PreprocessConfig{4, 1, 95}.validate()), Error);
  CHECK_THROWS_AS((PreprocessConfig{64, 95, 1}.validate()), Error);
  CHECK_THROWS_AS((PreprocessConfig{64, -1, 95}.validate()), Error);
  CHECK_NOTHROW(PreprocessConfig{}.validate());
}

TEST_CASE("PGM round trips, 8 and 16 bit") {
  const fs::path dir = scratch_dir("pgm");
  Tensor img({3, 5});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i * 17);
  write_pgm(dir / "a.pgm", img);
  CHECK(read_image(dir / "a.pgm") == img);

  Tensor deep({2, 2}, {0, 1000, 65535, 300});
  write_pgm16(dir / "b.pgm", deep);
  CHECK(read_image(dir / "b.pgm") == deep);

  std::ofstream(dir / "c.pgm") << "P2\n# comment\n2 2\n255\n1 2\n3 4\n";
  CHECK(read_image(dir / "c.pgm") == Tensor({2, 2}, {1, 2, 3, 4}));

  std::ofstream(dir / "d.ppm", std::ios::binary) << "P6\n1 1\n255\n" << char(100) << char(100) << char(100);
  CHECK(read_image(dir / "d.ppm")[0] == doctest::Approx(100.0));
}

TEST_CASE("PNG grayscale is read") {
  const fs::path dir = scratch_dir("png");
  write_gray_png(dir / "g.png", 2, 3, {0, 10, 20, 30, 40, 255});
  CHECK(read_image(dir / "g.png") == Tensor({2, 3}, {0, 10, 20, 30, 40, 255}));
}

TEST_CASE("unreadable images raise a structured error") {
  const fs::path dir = scratch_dir("bad");
  std::ofstream(dir / "x.pgm") << "P5\n4 4\n255\nab";
  for (const auto& p : {dir / "x.pgm", dir / "missing.pgm"}) {
    try {
      read_image(p);
      FAIL("expected unreadable_image");
    } catch (const Error& e) {
      CHECK(e.code() == "unreadable_image");
    }
  }
}
