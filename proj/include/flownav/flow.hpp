#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <vector>

#include "flownav/error.hpp"
#include "flownav/imaging.hpp"

namespace flownav {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

// Fixed observation points: a center point plus concentric rings of equally
// spaced points whose radii grow geometrically outward.
struct SamplePattern {
  Point2 center;
  int rings = 0;
  int per_ring = 0;
  std::vector<double> radii;   // innermost first
  std::vector<Point2> points;  // center, then ring-major / angle-minor
  int width = 0;
  int height = 0;

  std::size_t size() const noexcept { return points.size(); }
};

struct PatternShape {
  int rings = 5;
  int per_ring = 20;
  double outer_fraction = 0.45;  // outermost radius / min(width, height)
  double growth = 1.7;           // radii[k+1] / radii[k]
};

inline SamplePattern generate_pattern(int width, int height, const PatternShape& shape = {}) {
  if (width < 32 || height < 32) throw Error(ErrorKind::InvalidArgument, "pattern image must be at least 32x32");
  if (shape.rings < 1) throw Error(ErrorKind::InvalidArgument, "rings must be >= 1");
  if (shape.per_ring < 4) throw Error(ErrorKind::InvalidArgument, "per_ring must be >= 4");
  if (!(shape.growth > 1.0) || !(shape.outer_fraction > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "growth must exceed 1 and outer_fraction be positive");
  }

  SamplePattern p;
  p.width = width;
  p.height = height;
  p.rings = shape.rings;
  p.per_ring = shape.per_ring;
  p.center = {width / 2.0, height / 2.0};
  const double r_max = shape.outer_fraction * std::min(width, height);
  for (int k = 1; k <= shape.rings; ++k) {
    p.radii.push_back(r_max * std::pow(shape.growth, static_cast<double>(k - shape.rings)));
  }

  p.points.reserve(1 + static_cast<std::size_t>(shape.rings) * shape.per_ring);
  p.points.push_back(p.center);
  for (double r : p.radii) {
    for (int j = 0; j < shape.per_ring; ++j) {
      double c;
      double s;
      // Quarter turns are exact so axis points sit exactly on the center row/column.
      if ((4 * j) % shape.per_ring == 0) {
        static constexpr std::array<double, 4> kCos = {1.0, 0.0, -1.0, 0.0};
        static constexpr std::array<double, 4> kSin = {0.0, 1.0, 0.0, -1.0};
        const int quarter = 4 * j / shape.per_ring;
        c = kCos[quarter];
        s = kSin[quarter];
      } else {
        const double theta = 2.0 * std::numbers::pi * j / shape.per_ring;
        c = std::cos(theta);
        s = std::sin(theta);
      }
      p.points.push_back({p.center.x + r * c, p.center.y + r * s});
    }
  }
  for (const auto& pt : p.points) {
    if (pt.x < 0.0 || pt.y < 0.0 || pt.x > width - 1 || pt.y > height - 1) {
      throw Error(ErrorKind::PatternOutOfBounds, "observation point outside the image");
    }
  }
  return p;
}

enum class TrackStatus { Tracked, Lost };

struct FlowVector {
  double u1 = 0.0;
  double u2 = 0.0;
  bool operator==(const FlowVector&) const = default;
};

struct FlowField {
  std::vector<FlowVector> vectors;
  std::vector<TrackStatus> status;

  std::size_t size() const noexcept { return vectors.size(); }
  bool operator==(const FlowField&) const = default;
};

struct LKParams {
  int window_half = 10;  // 21x21 window
  int pyramid_levels = 3;
  int max_iters = 30;
  double epsilon = 0.01;  // pixels
  double min_eig = 1e-4;  // per-pixel, on [0,1] intensities

  void validate() const {
    if (window_half <= 0 || pyramid_levels <= 0 || max_iters <= 0 || !(epsilon > 0.0) ||
        !(min_eig > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "LK parameters must be strictly positive");
    }
  }
};

namespace detail {

// Smaller eigenvalue of the symmetric matrix [[a, b], [b, c]].
inline double min_eigenvalue(double a, double b, double c) noexcept {
  const double half_trace = 0.5 * (a + c);
  const double diff = 0.5 * (a - c);
  return half_trace - std::sqrt(diff * diff + b * b);
}

// Samples img at (x0 + i, y0 + j) for i, j in [0, n) into out (row-major).
// Every sample shares the same fractional offset, so the interior case reuses
// one set of bilinear weights; near borders it falls back to clamped sampling.
inline void sample_grid(const GrayImage& img, double x0, double y0, int n, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(n) * n);
  const int ix = static_cast<int>(std::floor(x0));
  const int iy = static_cast<int>(std::floor(y0));
  const int w = img.width();
  if (ix >= 0 && iy >= 0 && ix + n < w && iy + n < img.height()) {
    const double fx = x0 - ix;
    const double fy = y0 - iy;
    const double* base = img.pixels().data();
    for (int j = 0; j < n; ++j) {
      const double* r0 = base + static_cast<std::size_t>(iy + j) * w + ix;
      const double* r1 = r0 + w;
      double* dst = out.data() + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) {
        const double top = r0[i] + fx * (r0[i + 1] - r0[i]);
        const double bottom = r1[i] + fx * (r1[i + 1] - r1[i]);
        dst[i] = top + fy * (bottom - top);
      }
    }
    return;
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(j) * n + i] = sample_bilinear(img, x0 + i, y0 + j);
}

struct LkScratch {
  std::vector<double> patch;  // prev samples with a one-pixel apron for gradients
  std::vector<double> value;
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<double> warped;
};

inline FlowVector track_point(const Pyramid& prev, const Pyramid& next, Point2 point,
                              const LKParams& params, std::size_t levels, TrackStatus& status,
                              LkScratch& s) {
  const int half = params.window_half;
  const int side = 2 * half + 1;
  const int apron = side + 2;
  const std::size_t count = static_cast<std::size_t>(side) * side;
  const double norm = 1.0 / (static_cast<double>(count) * 255.0 * 255.0);
  s.value.resize(count);
  s.gx.resize(count);
  s.gy.resize(count);

  double gx_total = 0.0;  // running estimate at the current level
  double gy_total = 0.0;
  status = TrackStatus::Tracked;

  for (std::size_t lvl = levels; lvl-- > 0;) {
    const GrayImage& img_prev = prev.level(lvl);
    const GrayImage& img_next = next.level(lvl);
    const double scale = 1.0 / static_cast<double>(1u << lvl);
    const double px = point.x * scale;
    const double py = point.y * scale;

    // Central differences on the previous frame over the window.
    sample_grid(img_prev, px - half - 1, py - half - 1, apron, s.patch);
    double gxx = 0.0, gxy = 0.0, gyy = 0.0;
    for (int j = 0; j < side; ++j) {
      for (int i = 0; i < side; ++i) {
        const std::size_t c = static_cast<std::size_t>(j + 1) * apron + (i + 1);
        const std::size_t k = static_cast<std::size_t>(j) * side + i;
        s.value[k] = s.patch[c];
        s.gx[k] = 0.5 * (s.patch[c + 1] - s.patch[c - 1]);
        s.gy[k] = 0.5 * (s.patch[c + apron] - s.patch[c - apron]);
        gxx += s.gx[k] * s.gx[k];
        gxy += s.gx[k] * s.gy[k];
        gyy += s.gy[k] * s.gy[k];
      }
    }

    const double lambda = min_eigenvalue(gxx, gxy, gyy) * norm;
    double nu_x = 0.0;
    double nu_y = 0.0;
    if (lambda >= params.min_eig) {
      const double det = gxx * gyy - gxy * gxy;
      const double inv_xx = gyy / det;
      const double inv_xy = -gxy / det;
      const double inv_yy = gxx / det;
      for (int iter = 0; iter < params.max_iters; ++iter) {
        sample_grid(img_next, px + gx_total + nu_x - half, py + gy_total + nu_y - half, side, s.warped);
        double bx = 0.0;
        double by = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
          const double diff = s.value[k] - s.warped[k];
          bx += diff * s.gx[k];
          by += diff * s.gy[k];
        }
        const double ex = inv_xx * bx + inv_xy * by;
        const double ey = inv_xy * bx + inv_yy * by;
        nu_x += ex;
        nu_y += ey;
        if (!std::isfinite(nu_x) || !std::isfinite(nu_y)) {
          status = TrackStatus::Lost;
          return {};
        }
        if (std::hypot(ex, ey) < params.epsilon) break;
      }
    } else if (lvl == 0) {
      status = TrackStatus::Lost;
      return {};
    }

    if (lvl > 0) {
      gx_total = 2.0 * (gx_total + nu_x);
      gy_total = 2.0 * (gy_total + nu_y);
    } else {
      gx_total += nu_x;
      gy_total += nu_y;
    }
  }

  const GrayImage& base = next.base();
  const double fx = point.x + gx_total;
  const double fy = point.y + gy_total;
  if (fx < 0.0 || fy < 0.0 || fx > base.width() - 1 || fy > base.height() - 1) {
    status = TrackStatus::Lost;
    return {};
  }
  return {gx_total, gy_total};
}

}  // namespace detail

// Coarse-to-fine iterative Lucas-Kanade at every pattern point. Points are
// tracked independently; gradients come from the previous frame only.
inline FlowField lucas_kanade(const Pyramid& prev, const Pyramid& next, const SamplePattern& pattern,
                              const LKParams& params = {}) {
  params.validate();
  if (prev.size() != next.size()) {
    throw Error(ErrorKind::DimensionMismatch, "pyramids have different level counts");
  }
  for (std::size_t l = 0; l < prev.size(); ++l) {
    if (prev.level(l).width() != next.level(l).width() ||
        prev.level(l).height() != next.level(l).height()) {
      throw Error(ErrorKind::DimensionMismatch, "previous and next frames differ in size");
    }
  }
  // A pyramid cut short by the 8-pixel floor simply runs with fewer levels.
  const std::size_t levels = std::min<std::size_t>(prev.size(), params.pyramid_levels);

  FlowField field;
  field.vectors.resize(pattern.size());
  field.status.resize(pattern.size());
  detail::LkScratch scratch;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    field.vectors[i] =
        detail::track_point(prev, next, pattern.points[i], params, levels, field.status[i], scratch);
  }
  return field;
}

inline FlowField lucas_kanade(const GrayImage& prev, const GrayImage& next, const SamplePattern& pattern,
                              const LKParams& params = {}) {
  params.validate();
  return lucas_kanade(build_pyramid(prev, params.pyramid_levels),
                      build_pyramid(next, params.pyramid_levels), pattern, params);
}

enum class FlowRegion { All, LeftOfCenter, RightOfCenter };

// Summed flow magnitude over tracked points in a region. Points exactly on the
// center column belong to neither half.
inline double flow_intensity(const FlowField& field, FlowRegion region, const SamplePattern& pattern) {
  if (field.size() != pattern.size()) {
    throw Error(ErrorKind::LengthMismatch, "flow field does not match pattern");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field.status[i] != TrackStatus::Tracked) continue;
    const double x = pattern.points[i].x;
    const bool take = region == FlowRegion::All ||
                      (region == FlowRegion::LeftOfCenter && x < pattern.center.x) ||
                      (region == FlowRegion::RightOfCenter && x > pattern.center.x);
    if (take) total += std::hypot(field.vectors[i].u1, field.vectors[i].u2);
  }
  return total;
}

// Text dump, one line per point: "idx x y u1 u2 status".
inline void write_flow_dump(std::ostream& out, const FlowField& field, const SamplePattern& pattern) {
  char line[160];
  for (std::size_t i = 0; i < field.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu %.6f %.6f %.6f %.6f %s\n", i, pattern.points[i].x,
                  pattern.points[i].y, field.vectors[i].u1, field.vectors[i].u2,
                  field.status[i] == TrackStatus::Tracked ? "Tracked" : "Lost");
    out << line;
  }
}

}  // namespace flownav
