#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "flownav/error.hpp"
#include "flownav/features.hpp"
#include "flownav/flow.hpp"
#include "flownav/imaging.hpp"
#include "flownav/rng.hpp"

namespace flownav {

// Ground frame in cm: heading 0 looks along +x, +y is to the left, heading
// grows counter-clockwise. Obstacles stand on the floor (z = 0 up to height).

struct Obstacle {
  double x = 0.0;
  double y = 0.0;
  double width = 30.0;
  double height = 40.0;
  std::uint64_t texture_seed = 0;

  bool operator==(const Obstacle&) const = default;
};

struct World {
  std::uint64_t floor_texture_seed = 1;
  double background_level = 200.0;
  std::vector<Obstacle> obstacles;

  void validate() const {
    if (!(background_level >= 0.0 && background_level <= 255.0)) {
      throw Error(ErrorKind::InvalidArgument, "background level must lie in [0, 255]");
    }
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const auto& o = obstacles[i];
      if (!(o.width > 0.0) || !(o.height > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "obstacle dimensions must be > 0");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (obstacles[j].x == o.x && obstacles[j].y == o.y) {
          throw Error(ErrorKind::InvalidArgument, "two obstacles share a position");
        }
      }
    }
  }

  bool operator==(const World&) const = default;
};

struct CameraPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double eye_height = 10.0;
};

struct SimConfig {
  int width = 320;
  int height = 240;
  double horizontal_fov = std::numbers::pi / 3.0;
  double step_cm = 5.0;
  double turn_rad = 0.35;
  double noise_amp = 2.0;
  double sensor_cone = 15.0 * std::numbers::pi / 180.0;  // ultrasonic half-angle
  double sensor_max_range = 400.0;                       // reading when nothing is in the cone

  double focal_length() const { return 0.5 * width / std::tan(0.5 * horizontal_fov); }

  void validate() const {
    if (width < 1 || height < 1) throw Error(ErrorKind::InvalidArgument, "image size must be positive");
    if (!(horizontal_fov > 0.0 && horizontal_fov < std::numbers::pi)) {
      throw Error(ErrorKind::InvalidArgument, "field of view must lie in (0, pi)");
    }
    if (!(step_cm > 0.0) || !(turn_rad > 0.0) || !(noise_amp >= 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "step, turn must be > 0 and noise >= 0");
    }
    if (!(sensor_cone > 0.0 && sensor_cone < 0.5 * std::numbers::pi) || !(sensor_max_range > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "sensor cone must lie in (0, pi/2), range > 0");
    }
  }
};

enum class Turn { Left, Right };

struct NavDecision {
  enum class Kind { Forward, Deflect } kind = Kind::Forward;
  Turn turn = Turn::Right;  // meaningful for Deflect only

  static NavDecision forward() { return {}; }
  static NavDecision deflect(Turn t) { return {Kind::Deflect, t}; }

  bool operator==(const NavDecision& o) const {
    return kind == o.kind && (kind == Kind::Forward || turn == o.turn);
  }
};

inline std::string to_string(const NavDecision& d) {
  if (d.kind == NavDecision::Kind::Forward) return "Forward";
  return d.turn == Turn::Left ? "DeflectLeft" : "DeflectRight";
}

// ---------------------------------------------------------------------------
// Textures

namespace detail {

inline double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = hash_combine(hash_combine(seed, static_cast<std::uint64_t>(ix)), static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Smooth value noise in [0, 1) with unit lattice spacing.
inline double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = fade(x - fx);
  const double ty = fade(y - fy);
  const double a = lattice(seed, ix, iy);
  const double b = lattice(seed, ix + 1, iy);
  const double c = lattice(seed, ix, iy + 1);
  const double d = lattice(seed, ix + 1, iy + 1);
  return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
}

// Octaves whose cells shrink below about four pixels fade out, so distant texture
// turns to its mean instead of aliasing.
inline double layered_noise(std::uint64_t seed, double x, double y, double footprint,
                            std::span<const double> cells) {
  double sum = 0.0;
  double norm = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double amp = 1.0 / std::sqrt(static_cast<double>(k + 1));
    norm += amp * amp;
    const double r = footprint / cells[k];
    const double w = std::clamp((0.5 - r) / 0.25, 0.0, 1.0);
    if (w <= 0.0) continue;
    const double n = value_noise(hash_combine(seed, k), x / cells[k], y / cells[k]);
    sum += amp * w * (n - 0.5);
  }
  return sum / std::sqrt(norm);  // zero mean, spread comparable to one octave
}

inline constexpr double kFloorCells[] = {40.0, 16.0, 6.0, 2.5, 1.0};
inline constexpr double kObstacleCells[] = {14.0, 6.0, 2.5, 1.0};

inline double floor_value(std::uint64_t seed, double gx, double gy, double footprint) {
  return 120.0 + 300.0 * layered_noise(seed, gx, gy, footprint, kFloorCells);
}

inline double obstacle_base(std::uint64_t seed) { return 45.0 + 50.0 * lattice(seed, -7, 13); }

inline double obstacle_value(const Obstacle& o, double s, double z, double footprint) {
  return obstacle_base(o.texture_seed) + 160.0 * (layered_noise(o.texture_seed, s, z, footprint, kObstacleCells) + 0.5);
}

inline double pixel_noise(std::uint64_t seed, std::size_t index, double amp) {
  if (amp <= 0.0) return 0.0;
  const std::uint64_t h = hash_combine(seed, index);
  return amp * (2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rendering

// Surface id per pixel: -1 background, 0 floor, k + 1 for obstacle k.
struct RenderResult {
  GrayImage image;
  std::vector<int> surface;
};

struct ObstacleView {
  std::size_t index;
  double depth;    // along the viewing direction
  double lateral;  // to the right of the optical axis
};

// Obstacles in front of the camera, nearest first.
inline std::vector<ObstacleView> visible_obstacles(const World& world, const CameraPose& pose) {
  const double fx = std::cos(pose.heading), fy = std::sin(pose.heading);
  std::vector<ObstacleView> out;
  for (std::size_t k = 0; k < world.obstacles.size(); ++k) {
    const double dx = world.obstacles[k].x - pose.x;
    const double dy = world.obstacles[k].y - pose.y;
    const double depth = dx * fx + dy * fy;
    const double lateral = dx * fy - dy * fx;
    if (depth > 1.0) out.push_back({k, depth, lateral});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.depth < b.depth; });
  return out;
}

// Pinhole camera with the principal point at (width/2, height/2); pixel (u, v)
// looks along its integer coordinates, so row height/2 is the horizon.
inline RenderResult render_with_ids(const World& world, const CameraPose& pose, const SimConfig& cfg,
                                    std::uint64_t noise_seed = 0) {
  cfg.validate();
  const int w = cfg.width, h = cfg.height;
  const double f = cfg.focal_length();
  const double cx = 0.5 * w, cy = 0.5 * h;
  const double fx = std::cos(pose.heading), fy = std::sin(pose.heading);
  const double rx = fy, ry = -fx;  // right vector
  const auto views = visible_obstacles(world, pose);

  std::vector<double> px(static_cast<std::size_t>(w) * h);
  std::vector<int> ids(px.size());
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      const double xc = (u - cx) / f;  // right per unit depth
      const double yc = (v - cy) / f;  // down per unit depth
      double value = world.background_level;
      int id = -1;
      bool hit = false;
      for (const auto& ov : views) {
        const auto& o = world.obstacles[ov.index];
        const double s = xc * ov.depth - ov.lateral + 0.5 * o.width;  // cm from the left edge
        const double z = pose.eye_height - yc * ov.depth;              // cm above the floor
        if (s >= 0.0 && s < o.width && z >= 0.0 && z <= o.height) {
          value = detail::obstacle_value(o, s, z, ov.depth / f);
          id = static_cast<int>(ov.index) + 1;
          hit = true;
          break;
        }
      }
      if (!hit && v > cy) {
        const double t = pose.eye_height / yc;  // forward distance to the floor point
        const double lat = t * xc;
        const double gx = pose.x + t * fx + lat * rx;
        const double gy = pose.y + t * fy + lat * ry;
        // Geometric mean of the lateral and (foreshortened) depth extent of a pixel.
        const double footprint = t / f * std::sqrt(t / pose.eye_height);
        value = detail::floor_value(world.floor_texture_seed, gx, gy, footprint);
        id = 0;
      }
      value += detail::pixel_noise(noise_seed, idx, cfg.noise_amp);
      px[idx] = std::clamp(value, 0.0, 255.0);
      ids[idx] = id;
    }
  }
  return {GrayImage(w, h, std::move(px)), std::move(ids)};
}

inline GrayImage render(const World& world, const CameraPose& pose, const SimConfig& cfg,
                        std::uint64_t noise_seed = 0) {
  return render_with_ids(world, pose, cfg, noise_seed).image;
}

// ---------------------------------------------------------------------------
// Sensor and kinematics

// Emulated range finder: Euclidean distance to the nearest obstacle centre
// whose bearing lies inside the forward cone.
inline std::optional<double> nearest_obstacle_distance(const World& world, const CameraPose& pose,
                                                       double cone_half_angle) {
  if (!(cone_half_angle > 0.0 && cone_half_angle < 0.5 * std::numbers::pi)) {
    throw Error(ErrorKind::InvalidArgument, "cone half-angle must lie in (0, pi/2)");
  }
  const double fx = std::cos(pose.heading), fy = std::sin(pose.heading);
  std::optional<double> best;
  for (const auto& o : world.obstacles) {
    const double dx = o.x - pose.x;
    const double dy = o.y - pose.y;
    const double ahead = dx * fx + dy * fy;
    const double left = -dx * fy + dy * fx;
    const double bearing = std::atan2(left, ahead);
    if (std::abs(bearing) > cone_half_angle) continue;
    const double d = std::hypot(dx, dy);
    if (!best || d < *best) best = d;
  }
  return best;
}

inline CameraPose step(const CameraPose& pose, const NavDecision& decision, const SimConfig& cfg) {
  CameraPose next = pose;
  if (decision.kind == NavDecision::Kind::Deflect) {
    next.heading += decision.turn == Turn::Left ? cfg.turn_rad : -cfg.turn_rad;
  }
  next.x += cfg.step_cm * std::cos(next.heading);
  next.y += cfg.step_cm * std::sin(next.heading);
  return next;
}

// ---------------------------------------------------------------------------
// World files
//
//   flownav-world-v1
//   floor_seed <n>
//   background <level>
//   obstacle <x> <y> <w> <h> <seed>

inline void save_world(std::ostream& out, const World& world, std::string_view provenance = {}) {
  out << "flownav-world-v1\n";
  if (!provenance.empty()) out << provenance << '\n';
  out << "floor_seed " << world.floor_texture_seed << '\n';
  out << "background " << detail::format_sig(world.background_level, 17) << '\n';
  for (const auto& o : world.obstacles) {
    out << "obstacle " << detail::format_sig(o.x, 17) << ' ' << detail::format_sig(o.y, 17) << ' ' << detail::format_sig(o.width, 17)
        << ' ' << detail::format_sig(o.height, 17) << ' ' << o.texture_seed << '\n';
  }
}

inline World load_world(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim_cr(line) != "flownav-world-v1") {
    throw Error(ErrorKind::BadHeader, "not a flownav world file");
  }
  World world;
  world.obstacles.clear();
  while (std::getline(in, line)) {
    const std::string_view text = detail::trim_cr(line);
    if (text.empty() || text.front() == '#') continue;
    std::istringstream ss{std::string(text)};
    std::string key;
    ss >> key;
    bool ok = true;
    if (key == "floor_seed") {
      ok = static_cast<bool>(ss >> world.floor_texture_seed);
    } else if (key == "background") {
      ok = static_cast<bool>(ss >> world.background_level);
    } else if (key == "obstacle") {
      Obstacle o;
      ok = static_cast<bool>(ss >> o.x >> o.y >> o.width >> o.height >> o.texture_seed);
      world.obstacles.push_back(o);
    } else {
      throw Error(ErrorKind::BadHeader, "unknown world entry '" + key + "'");
    }
    std::string extra;
    if (!ok || (ss >> extra)) throw Error(ErrorKind::BadHeader, "malformed world line: " + std::string(text));
  }
  world.validate();
  return world;
}

// ---------------------------------------------------------------------------
// Seeded worlds

namespace detail {

inline Obstacle random_obstacle(Rng& rng, double x, double y) {
  Obstacle o;
  o.x = x;
  o.y = y;
  o.width = rng.uniform(30.0, 50.0);
  o.height = rng.uniform(30.0, 60.0);
  o.texture_seed = rng.next();
  return o;
}

// Obstacles beside the path, 10 to 40 cm clear of the camera's line.
inline void add_distractors(Rng& rng, World& world, int count, double x_lo, double x_hi) {
  for (int i = 0; i < count; ++i) {
    const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Obstacle o = random_obstacle(rng, rng.uniform(x_lo, x_hi), 0.0);
    o.y = side * (0.5 * o.width + rng.uniform(10.0, 40.0));
    world.obstacles.push_back(o);
  }
}

}  // namespace detail

// Dataset world: one obstacle on the path that the straight run ends just
// short of, plus obstacles off to the sides that the camera passes.
inline World dataset_world(std::uint64_t seed, int frames = 60, const SimConfig& cfg = {}) {
  Rng rng(hash_combine(seed, 0x776f726c64ULL));
  World world;
  world.floor_texture_seed = rng.next();
  world.background_level = rng.uniform(180.0, 220.0);
  const double travel = cfg.step_cm * (frames - 1);
  world.obstacles.push_back(detail::random_obstacle(rng, travel + rng.uniform(10.0, 25.0), rng.uniform(-10.0, 10.0)));
  detail::add_distractors(rng, world, 2 + static_cast<int>(rng.index(2)), 40.0, travel);
  return world;
}

// Navigation world: obstacles spaced along the initial heading, roughly on the path.
inline World navigation_world(std::uint64_t seed, int obstacles = 3) {
  Rng rng(hash_combine(seed, 0x6e6176ULL));
  World world;
  world.floor_texture_seed = rng.next();
  world.background_level = rng.uniform(180.0, 220.0);
  double x = 0.0;
  for (int i = 0; i < obstacles; ++i) {
    x += rng.uniform(130.0, 180.0);
    world.obstacles.push_back(detail::random_obstacle(rng, x, rng.uniform(-20.0, 20.0)));
  }
  detail::add_distractors(rng, world, 2, 60.0, x);
  return world;
}

// ---------------------------------------------------------------------------
// Dataset generation

struct RunSpec {
  World world;
  int frames = 60;
};

inline std::vector<RunSpec> default_world_script(std::uint64_t seed, int worlds = 8, int frames = 60,
                                                 const SimConfig& cfg = {}) {
  std::vector<RunSpec> script;
  for (int i = 0; i < worlds; ++i) script.push_back({dataset_world(hash_combine(seed, i), frames, cfg), frames});
  return script;
}

inline std::uint64_t frame_noise_seed(std::uint64_t seed, std::size_t run, std::size_t frame) {
  return hash_combine(hash_combine(seed, run), frame);
}

// Straight runs from the origin; one sample per consecutive frame pair,
// labelled by the sensor reading at the later frame. With nothing in the
// cone the sensor reports its maximum range.
using FrameSink = std::function<void(std::size_t run, std::size_t frame, const GrayImage&)>;

inline Dataset generate_dataset(const std::vector<RunSpec>& script, const SimConfig& cfg, const LKParams& lk,
                                const SamplePattern& pattern, double threshold_cm, std::uint64_t seed,
                                const FrameSink& on_frame = {}) {
  if (script.empty()) throw Error(ErrorKind::InvalidArgument, "world script has no runs");
  cfg.validate();
  lk.validate();
  if (pattern.width != cfg.width || pattern.height != cfg.height) {
    throw Error(ErrorKind::DimensionMismatch, "pattern was generated for a different image size");
  }
  Dataset ds;
  ds.threshold_cm = threshold_cm;
  ds.pattern_meta = PatternMeta{pattern.rings, pattern.per_ring, pattern.width, pattern.height};
  for (std::size_t r = 0; r < script.size(); ++r) {
    const auto& run = script[r];
    run.world.validate();
    if (run.frames < 2) throw Error(ErrorKind::TooFewFrames, "each run needs at least two frames");
    CameraPose pose;
    std::optional<Pyramid> prev;
    for (int i = 0; i < run.frames; ++i) {
      const GrayImage frame = render(run.world, pose, cfg, frame_noise_seed(seed, r, i));
      if (on_frame) on_frame(r, static_cast<std::size_t>(i), frame);
      Pyramid next = build_pyramid(frame, lk.pyramid_levels);
      if (prev) {
        const FlowField field = lucas_kanade(*prev, next, pattern, lk);
        const double d = nearest_obstacle_distance(run.world, pose, cfg.sensor_cone).value_or(cfg.sensor_max_range);
        ds.samples.push_back({extract_features(field), label_from_distance(d, threshold_cm), d});
      }
      prev = std::move(next);
      pose = step(pose, NavDecision::forward(), cfg);
    }
  }
  return ds;
}

}  // namespace flownav
