#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flownav/error.hpp"

namespace flownav {

// Single-channel image with real-valued intensities in [0, 255], row-major.
// Quantization to bytes happens only in save_pgm().
class GrayImage {
 public:
  GrayImage(int width, int height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width_ < 1 || height_ < 1) {
      throw Error(ErrorKind::InvalidImage, "image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
      throw Error(ErrorKind::InvalidImage, "pixel count does not match dimensions");
    }
    for (double v : pixels_) {
      if (!(v >= 0.0 && v <= 255.0)) {
        throw Error(ErrorKind::InvalidImage, "intensity outside [0, 255]");
      }
    }
  }

  GrayImage(int width, int height, double fill)
      : GrayImage(width, height,
                  std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                          static_cast<std::size_t>(std::max(height, 0)),
                                      fill)) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  double at(int x, int y) const noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  // Clamp-to-edge access.
  double at_clamped(int x, int y) const noexcept {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return at(x, y);
  }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_;
  int height_;
  std::vector<double> pixels_;
};

// Bilinear interpolation; coordinates are clamped to [0, w-1] x [0, h-1] first.
inline double sample_bilinear(const GrayImage& img, double x, double y) noexcept {
  const double cx = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double top = img.at(x0, y0) + fx * (img.at(x1, y0) - img.at(x0, y0));
  const double bottom = img.at(x0, y1) + fx * (img.at(x1, y1) - img.at(x0, y1));
  return top + fy * (bottom - top);
}

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval 255)

namespace detail {

inline void skip_pgm_space(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const auto c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      ++pos;
    } else {
      break;
    }
  }
}

inline long read_pgm_number(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  skip_pgm_space(bytes, pos);
  if (pos >= bytes.size()) throw Error(ErrorKind::BadHeader, "unexpected end of header");
  if (bytes[pos] < '0' || bytes[pos] > '9') {
    throw Error(ErrorKind::BadHeader, "non-numeric header field");
  }
  long value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1'000'000) throw Error(ErrorKind::BadHeader, "header field too large");
    ++pos;
  }
  return value;
}

}  // namespace detail

inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorKind::BadMagic, "not a binary P5 PGM");
  }
  std::size_t pos = 2;
  const long width = detail::read_pgm_number(bytes, pos);
  const long height = detail::read_pgm_number(bytes, pos);
  const long maxval = detail::read_pgm_number(bytes, pos);
  if (width < 1 || height < 1) throw Error(ErrorKind::BadHeader, "zero image dimension");
  if (maxval != 255) throw Error(ErrorKind::BadHeader, "maxval must be 255");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size()) throw Error(ErrorKind::Truncated, "missing raster");
  ++pos;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count) {
    throw Error(ErrorKind::Truncated, "raster has fewer than width*height bytes");
  }
  std::vector<double> pixels(count);
  for (std::size_t i = 0; i < count; ++i) pixels[i] = bytes[pos + i];
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

inline std::uint8_t quantize_intensity(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

// An optional comment (one line, written after a "# ") goes between the magic and the size.
inline std::vector<std::uint8_t> save_pgm(const GrayImage& img, std::string_view comment = {}) {
  std::string header = "P5\n";
  if (!comment.empty()) {
    if (comment.find('\n') != std::string_view::npos) {
      throw Error(ErrorKind::InvalidArgument, "PGM comment must be a single line");
    }
    header += comment.starts_with('#') ? std::string(comment) : "# " + std::string(comment);
    header += '\n';
  }
  header += std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.pixels().size());
  for (double v : img.pixels()) out.push_back(quantize_intensity(v));
  return out;
}

inline GrayImage read_pgm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_pgm(bytes);
}

inline void write_pgm_file(const std::filesystem::path& path, const GrayImage& img, std::string_view comment = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const auto bytes = save_pgm(img, comment);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Frame sequences live in a directory as frame_000000.pgm, frame_000001.pgm, ...
inline std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.pgm", index);
  return buf;
}

// Reads consecutive frames starting at index 0 until the first gap.
inline std::vector<GrayImage> read_frame_sequence(const std::filesystem::path& dir) {
  std::vector<GrayImage> frames;
  for (std::size_t i = 0;; ++i) {
    const auto path = dir / frame_filename(i);
    if (!std::filesystem::exists(path)) break;
    frames.push_back(read_pgm_file(path));
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Gaussian pyramid

class Pyramid {
 public:
  explicit Pyramid(std::vector<GrayImage> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw Error(ErrorKind::ZeroLevels, "pyramid needs at least one level");
  }

  std::size_t size() const noexcept { return levels_.size(); }
  const GrayImage& level(std::size_t i) const { return levels_.at(i); }
  const GrayImage& base() const noexcept { return levels_.front(); }

 private:
  std::vector<GrayImage> levels_;
};

// One reduction step: separable [1 4 6 4 1]/16 smoothing with replicated
// borders, then keep even coordinates. Output is ceil(w/2) x ceil(h/2).
inline GrayImage pyramid_down(const GrayImage& src) {
  static constexpr double kTaps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int w = src.width();
  const int h = src.height();
  const int dw = (w + 1) / 2;
  const int dh = (h + 1) / 2;

  // Horizontal pass evaluated only at even columns.
  std::vector<double> rows(static_cast<std::size_t>(dw) * h);
  for (int y = 0; y < h; ++y) {
    for (int dx = 0; dx < dw; ++dx) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * src.at_clamped(2 * dx + k, y);
      rows[static_cast<std::size_t>(y) * dw + dx] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(dw) * dh);
  for (int dy = 0; dy < dh; ++dy) {
    for (int dx = 0; dx < dw; ++dx) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) {
        const int sy = std::clamp(2 * dy + k, 0, h - 1);
        acc += kTaps[k + 2] * rows[static_cast<std::size_t>(sy) * dw + dx];
      }
      // Convex combination of values in [0, 255]; clamp only guards rounding.
      out[static_cast<std::size_t>(dy) * dw + dx] = std::clamp(acc, 0.0, 255.0);
    }
  }
  return GrayImage(dw, dh, std::move(out));
}

inline constexpr int kMinPyramidSide = 8;

// Stops early once the next level would drop below 8 pixels on either side.
inline Pyramid build_pyramid(const GrayImage& img, std::size_t levels) {
  if (levels == 0) throw Error(ErrorKind::ZeroLevels, "levels must be >= 1");
  std::vector<GrayImage> out;
  out.reserve(levels);
  out.push_back(img);
  while (out.size() < levels) {
    const GrayImage& last = out.back();
    if ((last.width() + 1) / 2 < kMinPyramidSide || (last.height() + 1) / 2 < kMinPyramidSide) break;
    out.push_back(pyramid_down(last));
  }
  return Pyramid(std::move(out));
}

}  // namespace flownav
