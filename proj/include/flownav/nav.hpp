#pragma once

#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flownav/error.hpp"
#include "flownav/features.hpp"
#include "flownav/flow.hpp"
#include "flownav/learn.hpp"
#include "flownav/sim.hpp"

namespace flownav {

// Steering rule for a given label: -1 keeps going, +1 turns toward the half
// with strictly less flow, and an exact tie turns right.
inline NavDecision decide_from_label(int label, const FlowField& field, const SamplePattern& pattern) {
  const double left = flow_intensity(field, FlowRegion::LeftOfCenter, pattern);
  const double right = flow_intensity(field, FlowRegion::RightOfCenter, pattern);
  if (label < 0) return NavDecision::forward();
  return NavDecision::deflect(left < right ? Turn::Left : Turn::Right);
}

inline NavDecision decide(const FlowField& field, const SamplePattern& pattern, const SvmModel& model) {
  if (field.size() != pattern.size()) throw Error(ErrorKind::LengthMismatch, "flow field does not match pattern");
  const auto features = extract_features(field);
  if (features.size() != model.dimension()) {
    throw Error(ErrorKind::LengthMismatch, "model expects a different feature length");
  }
  return decide_from_label(predict_svm(model, features).label, field, pattern);
}

// Anything that labels one cycle: the flow just measured plus the pose it was
// measured at (only the ground-truth oracle looks at the pose).
using Labeller = std::function<int(const FlowField&, const CameraPose&)>;

inline Labeller svm_labeller(const SvmModel& model) {
  return [&model](const FlowField& field, const CameraPose&) {
    const auto features = extract_features(field);
    if (features.size() != model.dimension()) {
      throw Error(ErrorKind::LengthMismatch, "model expects a different feature length");
    }
    return predict_svm(model, features).label;
  };
}

// Perfect classifier: reads the emulated range finder instead of the image.
inline Labeller oracle_labeller(const World& world, const SimConfig& cfg, double threshold_cm = kDefaultThresholdCm) {
  return [&world, cfg, threshold_cm](const FlowField&, const CameraPose& pose) {
    return label_from_distance(nearest_obstacle_distance(world, pose, cfg.sensor_cone), threshold_cm);
  };
}

struct NavOptions {
  int max_steps = 200;
  double collision_cm = 10.0;
  double arena_half_extent = 500.0;  // 10 m square centred on the start
  std::uint64_t seed = 42;
  CameraPose start;
};

struct NavTraceEntry {
  int step = 0;
  CameraPose pose;
  std::optional<double> distance;
  int label = -1;
  NavDecision decision;
  double left_intensity = 0.0;
  double right_intensity = 0.0;
  FlowField flow;
};

struct NavSummary {
  int collisions = 0;
  int deflections = 0;
  int steps = 0;
  bool left_arena = false;
};

struct NavResult {
  std::vector<NavTraceEntry> trace;
  NavSummary summary;
};

using NavFrameSink = std::function<void(int step, const GrayImage&)>;

// The work cycle: a reference frame at the start pose, then per cycle move by
// the previous decision, render, measure flow against the previous frame,
// label, decide. After a deflection the reference is caught again once the
// turn is done, so flow always measures forward travel. A collision is counted
// each time the forward range reading drops below collision_cm after being at
// or above it.
inline NavResult run_navigation(const World& world, const SimConfig& cfg, const LKParams& lk,
                                const SamplePattern& pattern, const Labeller& labeller, const NavOptions& opt = {},
                                const NavFrameSink& on_frame = {}) {
  if (opt.max_steps < 2) throw Error(ErrorKind::InvalidArgument, "max_steps must be >= 2");
  if (!(opt.collision_cm > 0.0) || !(opt.arena_half_extent > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "collision distance and arena bound must be > 0");
  }
  world.validate();
  cfg.validate();
  lk.validate();
  if (pattern.width != cfg.width || pattern.height != cfg.height) {
    throw Error(ErrorKind::DimensionMismatch, "pattern was generated for a different image size");
  }

  NavResult result;
  CameraPose pose = opt.start;
  GrayImage reference = render(world, pose, cfg, hash_combine(opt.seed, 0));
  if (on_frame) on_frame(0, reference);
  Pyramid prev = build_pyramid(reference, lk.pyramid_levels);
  NavDecision decision = NavDecision::forward();
  bool in_contact = false;

  for (int s = 1; s <= opt.max_steps; ++s) {
    if (decision.kind == NavDecision::Kind::Deflect) {
      CameraPose turned = pose;
      turned.heading += decision.turn == Turn::Left ? cfg.turn_rad : -cfg.turn_rad;
      prev = build_pyramid(render(world, turned, cfg, hash_combine(hash_combine(opt.seed, static_cast<std::uint64_t>(s)), 1)),
                           lk.pyramid_levels);
    }
    pose = step(pose, decision, cfg);
    const GrayImage frame = render(world, pose, cfg, hash_combine(opt.seed, static_cast<std::uint64_t>(s)));
    if (on_frame) on_frame(s, frame);
    Pyramid next = build_pyramid(frame, lk.pyramid_levels);

    NavTraceEntry e;
    e.step = s;
    e.pose = pose;
    e.flow = lucas_kanade(prev, next, pattern, lk);
    e.distance = nearest_obstacle_distance(world, pose, cfg.sensor_cone);
    e.label = labeller(e.flow, pose) > 0 ? +1 : -1;
    e.left_intensity = flow_intensity(e.flow, FlowRegion::LeftOfCenter, pattern);
    e.right_intensity = flow_intensity(e.flow, FlowRegion::RightOfCenter, pattern);
    e.decision = decide_from_label(e.label, e.flow, pattern);

    const bool contact = e.distance && *e.distance < opt.collision_cm;
    if (contact && !in_contact) ++result.summary.collisions;
    in_contact = contact;
    if (e.decision.kind == NavDecision::Kind::Deflect) ++result.summary.deflections;
    decision = e.decision;
    result.trace.push_back(std::move(e));
    prev = std::move(next);

    if (std::abs(pose.x - opt.start.x) > opt.arena_half_extent ||
        std::abs(pose.y - opt.start.y) > opt.arena_half_extent) {
      result.summary.left_arena = true;
      break;
    }
  }
  result.summary.steps = static_cast<int>(result.trace.size());
  return result;
}

inline NavResult run_navigation(const World& world, const SimConfig& cfg, const LKParams& lk,
                                const SamplePattern& pattern, const SvmModel& model, const NavOptions& opt = {},
                                const NavFrameSink& on_frame = {}) {
  if (model.dimension() != 2 * pattern.size()) {
    throw Error(ErrorKind::LengthMismatch, "model expects a different feature length");
  }
  return run_navigation(world, cfg, lk, pattern, svm_labeller(model), opt, on_frame);
}

inline void write_nav_trace_csv(std::ostream& out, const NavResult& r, std::string_view provenance = {}) {
  if (!provenance.empty()) out << provenance << '\n';
  out << "step,x,y,heading,distance,label,decision,left_intensity,right_intensity\n";
  char buf[256];
  for (const auto& e : r.trace) {
    const std::string dist = e.distance ? detail::format_sig(*e.distance, 9) : std::string("-");
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.9f,%s,%d,%s,%.6f,%.6f\n", e.step, e.pose.x, e.pose.y,
                  e.pose.heading, dist.c_str(), e.label, to_string(e.decision).c_str(), e.left_intensity,
                  e.right_intensity);
    out << buf;
  }
}

}  // namespace flownav
