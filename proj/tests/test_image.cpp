#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "helpers.hpp"
#include "sceneseg/image.hpp"
#include "sceneseg/rng.hpp"

using namespace sceneseg;

namespace {

RasterImage random_image(DetRng& rng, int w, int h) {
  RasterImage im;
  im.width = w;
  im.height = h;
  im.px.resize(static_cast<size_t>(w) * h * 3);
  for (auto& b : im.px) b = static_cast<std::uint8_t>(rng.uniform_int(256));
  return im;
}

}  // namespace

TEST_CASE("ppm codec round-trips", "[image]") {
  DetRng rng(1);
  TempDir td("image_rt");
  for (int i = 0; i < 5; ++i) {
    const RasterImage im = random_image(rng, 7 + i * 13, 3 + i * 5);
    std::istringstream in(encode_ppm(im));
    CHECK(decode_ppm(in, "mem") == im);
    save_ppm(im, td.file("x.ppm"));
    CHECK(load_ppm(td.file("x.ppm")) == im);
  }
}

TEST_CASE("ppm header comments are skipped", "[image]") {
  std::string data = "P6\n# a comment\n2 1\n# another\n255\n";
  data += std::string("\xff\x00\x00\x00\xff\x00", 6);
  std::istringstream in(data);
  const RasterImage im = decode_ppm(in, "mem");
  CHECK(im.width == 2);
  CHECK(im.height == 1);
  CHECK(im.at(0, 0)[0] == 255);
  CHECK(im.at(1, 0)[1] == 255);
}

TEST_CASE("ppm decode rejects bad input", "[image]") {
  auto decode_str = [](std::string s) {
    std::istringstream in(s);
    return decode_ppm(in, "mem");
  };
  require_error(ErrorKind::ImageDecode, [&] { decode_str("P5\n2 1\n255\n....."); });
  require_error(ErrorKind::ImageDecode, [&] { decode_str("P6\n2 1\n254\n......"); });
  require_error(ErrorKind::ImageDecode, [&] { decode_str("P6\n2 1\n255\nab"); });  // short
  require_error(ErrorKind::ImageDecode, [&] { decode_str("P6\nx y\n255\n"); });
  require_error(ErrorKind::Io, [] { load_ppm("/nonexistent/frame.ppm"); });
}

TEST_CASE("nearest-neighbor resize picks source centers", "[image]") {
  RasterImage two;
  two.width = 2;
  two.height = 1;
  two.px = {200, 0, 0, 0, 0, 200};  // red | blue
  const RasterImage four = resize_nearest(two, 4, 1);
  CHECK(four.at(0, 0)[0] == 200);
  CHECK(four.at(1, 0)[0] == 200);
  CHECK(four.at(2, 0)[2] == 200);
  CHECK(four.at(3, 0)[2] == 200);

  const RasterImage solid = RasterImage::solid(64, 28, 10, 20, 30);
  const RasterImage big = resize_nearest(solid, kFrameW, kFrameH);
  CHECK(big.width == kFrameW);
  CHECK(big.height == kFrameH);
  CHECK(big == RasterImage::solid(kFrameW, kFrameH, 10, 20, 30));
}

TEST_CASE("prepare_frame is a no-op at target size", "[image]") {
  DetRng rng(2);
  const RasterImage im = random_image(rng, kFrameW, kFrameH);
  CHECK(prepare_frame(im) == im);
  const RasterImage small = random_image(rng, 30, 20);
  const RasterImage scaled = prepare_frame(small);
  CHECK(scaled.width == kFrameW);
  CHECK(scaled.height == kFrameH);
}

TEST_CASE("marker overlay touches only the declared box", "[image]") {
  DetRng rng(3);
  const RasterImage raw = random_image(rng, 64, 28);
  for (int shot_id : {7, 42, 1234}) {
    const RasterImage plain = prepare_frame(raw);
    const RasterImage marked = annotate_frame(raw, shot_id);
    const int digits = static_cast<int>(std::to_string(shot_id).size());
    const int bw = marker_box_width(digits);
    REQUIRE(bw <= kFrameW);
    int whites = 0;
    for (int y = 0; y < kFrameH; ++y)
      for (int x = 0; x < kFrameW; ++x) {
        const auto* p = marked.at(x, y);
        if (x < bw && y < kMarkerBoxH) {
          // inside the box: pure black or pure white only
          const bool black = p[0] == 0 && p[1] == 0 && p[2] == 0;
          const bool white = p[0] == 255 && p[1] == 255 && p[2] == 255;
          REQUIRE((black || white));
          whites += white;
        } else {
          const auto* q = plain.at(x, y);
          REQUIRE(p[0] == q[0]);
          REQUIRE(p[1] == q[1]);
          REQUIRE(p[2] == q[2]);
        }
      }
    CHECK(whites >= 5 * digits);  // every digit paints a visible glyph
  }
}

TEST_CASE("digit glyphs are pairwise distinct", "[image]") {
  const RasterImage canvas = RasterImage::solid(kFrameW, kFrameH, 90, 90, 90);
  std::set<std::vector<std::uint8_t>> seen;
  for (int d = 0; d < 10; ++d) {
    const RasterImage im = annotate_frame(canvas, d);
    std::vector<std::uint8_t> region;
    for (int y = 0; y < kMarkerBoxH; ++y)
      for (int x = 0; x < marker_box_width(1); ++x) region.push_back(im.at(x, y)[0]);
    seen.insert(std::move(region));
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("annotation is deterministic and rejects negative ids", "[image]") {
  DetRng rng(4);
  const RasterImage raw = random_image(rng, 40, 30);
  CHECK(annotate_frame(raw, 37) == annotate_frame(raw, 37));
  require_error(ErrorKind::Config, [&] { annotate_frame(raw, -1); });
}

TEST_CASE("cache names are stable and collision-averse", "[image]") {
  const std::string a = annotation_cache_name("frames/s1.ppm", 4, true);
  CHECK(a == annotation_cache_name("frames/s1.ppm", 4, true));
  std::set<std::string> names = {
      a,
      annotation_cache_name("frames/s1.ppm", 4, false),
      annotation_cache_name("frames/s1.ppm", 5, true),
      annotation_cache_name("frames/s2.ppm", 4, true),
  };
  CHECK(names.size() == 4);
  CHECK(a.size() == 20);  // 16 hex chars + ".ppm"
  CHECK(a.substr(16) == ".ppm");
}
