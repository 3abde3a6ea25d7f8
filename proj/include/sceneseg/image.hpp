#pragma once

// 8-bit RGB raster, PPM (P6) codec, nearest-neighbor resize, and the
// shot-ID marker overlay. Glyphs are a fixed 5x7 dot matrix so rendering
// is identical on every platform (no font stack).

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sceneseg/errors.hpp"
#include "sceneseg/rng.hpp"

namespace sceneseg {

constexpr int kFrameW = 147;
constexpr int kFrameH = 63;

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> px;  // RGB, row-major

  static RasterImage solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RasterImage im;
    im.width = w;
    im.height = h;
    im.px.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < im.px.size(); i += 3) {
      im.px[i] = r;
      im.px[i + 1] = g;
      im.px[i + 2] = b;
    }
    return im;
  }

  std::uint8_t* at(int x, int y) { return px.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return px.data() + (static_cast<size_t>(y) * width + x) * 3;
  }

  bool operator==(const RasterImage&) const = default;
};

namespace detail {

inline int ppm_next_int(std::istream& in) {
  // skips whitespace and '#' comments per the PPM grammar
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  if (!in) fail(ErrorKind::ImageDecode, "bad PPM header token");
  return v;
}

}  // namespace detail

inline RasterImage decode_ppm(std::istream& in, const std::string& what) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || m1 != '6')
    fail(ErrorKind::ImageDecode, "not a P6 PPM: " + what);
  RasterImage im;
  im.width = detail::ppm_next_int(in);
  im.height = detail::ppm_next_int(in);
  const int maxval = detail::ppm_next_int(in);
  if (im.width <= 0 || im.height <= 0 || maxval != 255)
    fail(ErrorKind::ImageDecode, "unsupported PPM dimensions/maxval: " + what);
  in.get();  // single whitespace after maxval
  im.px.resize(static_cast<size_t>(im.width) * im.height * 3);
  in.read(reinterpret_cast<char*>(im.px.data()), static_cast<std::streamsize>(im.px.size()));
  if (static_cast<size_t>(in.gcount()) != im.px.size())
    fail(ErrorKind::ImageDecode, "truncated PPM payload: " + what);
  return im;
}

inline RasterImage load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open frame " + path);
  return decode_ppm(in, path);
}

inline std::string encode_ppm(const RasterImage& im) {
  std::ostringstream out;
  out << "P6\n" << im.width << ' ' << im.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(im.px.data()),
            static_cast<std::streamsize>(im.px.size()));
  return out.str();
}

inline void save_ppm(const RasterImage& im, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write frame " + path);
  const std::string bytes = encode_ppm(im);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "short write to " + path);
}

inline RasterImage resize_nearest(const RasterImage& src, int dw, int dh) {
  if (src.width <= 0 || src.height <= 0)
    fail(ErrorKind::ImageDecode, "resize of empty image");
  RasterImage dst;
  dst.width = dw;
  dst.height = dh;
  dst.px.resize(static_cast<size_t>(dw) * dh * 3);
  for (int y = 0; y < dh; ++y) {
    int sy = static_cast<int>((y + 0.5) * src.height / dh);
    if (sy >= src.height) sy = src.height - 1;
    for (int x = 0; x < dw; ++x) {
      int sx = static_cast<int>((x + 0.5) * src.width / dw);
      if (sx >= src.width) sx = src.width - 1;
      const std::uint8_t* s = src.at(sx, sy);
      std::uint8_t* d = dst.at(x, y);
      d[0] = s[0];
      d[1] = s[1];
      d[2] = s[2];
    }
  }
  return dst;
}

// 5x7 digit glyphs, one row per byte, bit 4 = leftmost column.
inline const std::uint8_t* digit_glyph(int d) {
  static const std::uint8_t rows[10][7] = {
      {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110},  // 0
      {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110},  // 1
      {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111},  // 2
      {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110},  // 3
      {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010},  // 4
      {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110},  // 5
      {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110},  // 6
      {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000},  // 7
      {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110},  // 8
      {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100},  // 9
  };
  return rows[d];
}

// Marker box geometry for an n-digit id: 1px padding all around, 1px gap
// between glyphs. Anchored at the image's top-left corner.
inline int marker_box_width(int digits) { return 1 + digits * 6; }
constexpr int kMarkerBoxH = 9;

inline RasterImage prepare_frame(const RasterImage& raw) {
  if (raw.width == kFrameW && raw.height == kFrameH) return raw;
  return resize_nearest(raw, kFrameW, kFrameH);
}

inline RasterImage annotate_frame(const RasterImage& raw, int shot_id) {
  if (shot_id < 0) fail(ErrorKind::Config, "shot_id must be >= 0");
  RasterImage im = prepare_frame(raw);
  const std::string digits = std::to_string(shot_id);
  const int bw = std::min(marker_box_width(static_cast<int>(digits.size())), im.width);
  const int bh = std::min(kMarkerBoxH, im.height);
  for (int y = 0; y < bh; ++y)
    for (int x = 0; x < bw; ++x) {
      std::uint8_t* p = im.at(x, y);
      p[0] = p[1] = p[2] = 0;
    }
  for (size_t k = 0; k < digits.size(); ++k) {
    const std::uint8_t* glyph = digit_glyph(digits[k] - '0');
    const int gx = 1 + static_cast<int>(k) * 6;
    for (int row = 0; row < 7; ++row)
      for (int col = 0; col < 5; ++col) {
        if (!(glyph[row] & (1 << (4 - col)))) continue;
        const int x = gx + col, y = 1 + row;
        if (x >= im.width || y >= im.height) continue;
        std::uint8_t* p = im.at(x, y);
        p[0] = p[1] = p[2] = 255;
      }
  }
  return im;
}

// Cache filename for an annotated frame; keyed by source path + annotation.
inline std::string annotation_cache_name(const std::string& frame_path, int shot_id,
                                         bool marker) {
  const std::string key =
      frame_path + "|" + std::to_string(shot_id) + "|" + (marker ? "m" : "p");
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx.ppm",
                static_cast<unsigned long long>(fnv1a64(key)));
  return buf;
}

}  // namespace sceneseg
