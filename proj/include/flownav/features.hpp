#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flownav/error.hpp"
#include "flownav/flow.hpp"

namespace flownav {

// Interleaved [mag_0, phase_0, mag_1, phase_1, ...] in pattern point order.
// Magnitudes in pixels, phases in radians within (-pi, pi].
using FeatureVector = std::vector<double>;

inline FeatureVector extract_features(const FlowField& field) {
  FeatureVector out(2 * field.size(), 0.0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field.status[i] != TrackStatus::Tracked) continue;
    const auto [u1, u2] = field.vectors[i];
    const double mag = std::hypot(u1, u2);
    double phase = 0.0;
    if (mag > 0.0) {
      phase = std::atan2(u2, u1);
      if (phase <= -std::numbers::pi) phase = std::numbers::pi;
    }
    out[2 * i] = mag;
    out[2 * i + 1] = phase;
  }
  return out;
}

inline constexpr double kDefaultThresholdCm = 50.0;

// +1 (obstacle) when the distance is at or inside the threshold.
inline int label_from_distance(double distance_cm, double threshold_cm = kDefaultThresholdCm) {
  if (distance_cm < 0.0) throw Error(ErrorKind::NegativeDistance, "distance must be >= 0");
  if (!(threshold_cm > 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be > 0");
  return distance_cm <= threshold_cm ? +1 : -1;
}

inline int label_from_distance(std::optional<double> distance_cm, double threshold_cm = kDefaultThresholdCm) {
  return distance_cm ? label_from_distance(*distance_cm, threshold_cm) : -1;
}

struct LabeledSample {
  FeatureVector features;
  int label = -1;
  std::optional<double> distance_cm;
};

struct PatternMeta {
  int rings = 5;
  int per_ring = 20;
  int width = 320;
  int height = 240;

  std::size_t feature_length() const noexcept {
    return 2 * (1 + static_cast<std::size_t>(rings) * static_cast<std::size_t>(per_ring));
  }
  bool operator==(const PatternMeta&) const = default;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  std::optional<PatternMeta> pattern_meta;
  double threshold_cm = kDefaultThresholdCm;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t dimension() const noexcept { return samples.empty() ? 0 : samples.front().features.size(); }

  std::size_t count_label(int label) const noexcept {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.label == label ? 1 : 0;
    return n;
  }

  bool has_all_distances() const noexcept {
    for (const auto& s : samples) {
      if (!s.distance_cm) return false;
    }
    return true;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.pattern_meta = pattern_meta;
    out.threshold_cm = threshold_cm;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) out.samples.push_back(samples.at(i));
    return out;
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
  }

  void validate() const {
    const std::size_t dim = dimension();
    for (const auto& s : samples) {
      if (s.features.size() != dim) throw Error(ErrorKind::RaggedRow, "feature vectors differ in length");
      if (s.label != -1 && s.label != 1) throw Error(ErrorKind::BadLabel, "label must be -1 or +1");
    }
    if (pattern_meta && !samples.empty() && pattern_meta->feature_length() != dim) {
      throw Error(ErrorKind::BadHeader, "pattern metadata does not match feature length");
    }
  }
};

// ---------------------------------------------------------------------------
// Min-max scaling, fit on training data only. Unclamped on unseen data.

struct Scaler {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t dimension() const noexcept { return min.size(); }

  FeatureVector apply(std::span<const double> x) const {
    if (x.size() != min.size()) throw Error(ErrorKind::LengthMismatch, "feature length does not match scaler");
    FeatureVector out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double range = max[d] - min[d];
      out[d] = range > 0.0 ? (x[d] - min[d]) / range : 0.0;
    }
    return out;
  }

  bool operator==(const Scaler&) const = default;
};

inline Scaler fit_scaler(const Dataset& train) {
  if (train.samples.empty()) throw Error(ErrorKind::EmptyTraining, "cannot fit a scaler on no samples");
  const std::size_t dim = train.dimension();
  Scaler s{train.samples.front().features, train.samples.front().features};
  for (const auto& sample : train.samples) {
    if (sample.features.size() != dim) throw Error(ErrorKind::LengthMismatch, "ragged training set");
    for (std::size_t d = 0; d < dim; ++d) {
      s.min[d] = std::min(s.min[d], sample.features[d]);
      s.max[d] = std::max(s.max[d], sample.features[d]);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV persistence
//
//   [# provenance line]
//   label,distance_cm,f000_mag,f000_phase,...
//   #meta rings=5 per_ring=20 width=320 height=240 threshold_cm=50
//   +1,32.5,...

namespace detail {

inline std::string format_sig(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

inline std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

inline std::string feature_column_names(std::size_t dim) {
  std::string out;
  char buf[32];
  for (std::size_t d = 0; d < dim; ++d) {
    if (dim % 2 == 0) {
      std::snprintf(buf, sizeof buf, ",f%03zu_%s", d / 2, d % 2 == 0 ? "mag" : "phase");
    } else {
      std::snprintf(buf, sizeof buf, ",f%03zu", d);
    }
    out += buf;
  }
  return out;
}

inline void save_dataset(std::ostream& out, const Dataset& ds, std::string_view provenance = {}) {
  ds.validate();
  if (!provenance.empty()) out << provenance << '\n';
  out << "label,distance_cm" << feature_column_names(ds.dimension()) << '\n';
  out << "#meta";
  if (const auto& meta = ds.pattern_meta) {
    out << " rings=" << meta->rings << " per_ring=" << meta->per_ring << " width=" << meta->width
        << " height=" << meta->height;
  }
  out << " threshold_cm=" << detail::format_sig(ds.threshold_cm, 9) << '\n';
  for (const auto& s : ds.samples) {
    out << (s.label > 0 ? "+1" : "-1") << ',';
    if (s.distance_cm) out << detail::format_sig(*s.distance_cm, 9);
    for (double v : s.features) out << ',' << detail::format_sig(v, 9);
    out << '\n';
  }
}

inline Dataset load_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  std::optional<std::size_t> columns;
  std::size_t line_no = 0;
  bool saw_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim_cr(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (view.starts_with("#meta")) {
        PatternMeta meta;
        bool has_pattern = false;
        std::istringstream fields{std::string(view.substr(5))};
        std::string kv;
        while (fields >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw Error(ErrorKind::BadHeader, "malformed #meta field '" + kv + "'");
          const std::string key = kv.substr(0, eq);
          const auto value = detail::parse_double(std::string_view(kv).substr(eq + 1));
          if (!value) throw Error(ErrorKind::BadHeader, "non-numeric #meta value '" + kv + "'");
          if (key == "rings" || key == "per_ring" || key == "width" || key == "height") has_pattern = true;
          if (key == "rings") meta.rings = static_cast<int>(*value);
          else if (key == "per_ring") meta.per_ring = static_cast<int>(*value);
          else if (key == "width") meta.width = static_cast<int>(*value);
          else if (key == "height") meta.height = static_cast<int>(*value);
          else if (key == "threshold_cm") ds.threshold_cm = *value;
        }
        if (has_pattern) {
          ds.pattern_meta = meta;
          saw_meta = true;
        }
      }
      continue;
    }
    const auto cells = detail::split_csv(view);
    if (!columns) {
      if (cells.size() < 3 || cells[0] != "label" || cells[1] != "distance_cm") {
        throw Error(ErrorKind::BadHeader, "expected 'label,distance_cm,<features...>' header");
      }
      columns = cells.size();
      continue;
    }
    if (cells.size() != *columns) {
      throw Error(ErrorKind::RaggedRow, "line " + std::to_string(line_no) + " has " +
                                            std::to_string(cells.size()) + " columns, header has " +
                                            std::to_string(*columns));
    }
    LabeledSample s;
    if (cells[0] == "+1" || cells[0] == "1") s.label = 1;
    else if (cells[0] == "-1") s.label = -1;
    else throw Error(ErrorKind::BadLabel, "line " + std::to_string(line_no) + ": label '" + std::string(cells[0]) + "'");
    if (!cells[1].empty()) {
      s.distance_cm = detail::parse_double(cells[1]);
      if (!s.distance_cm) throw Error(ErrorKind::BadHeader, "line " + std::to_string(line_no) + ": bad distance");
    }
    s.features.reserve(cells.size() - 2);
    for (std::size_t c = 2; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v) throw Error(ErrorKind::RaggedRow, "line " + std::to_string(line_no) + ": non-numeric feature");
      s.features.push_back(*v);
    }
    ds.samples.push_back(std::move(s));
  }
  if (!columns) throw Error(ErrorKind::BadHeader, "missing header line");
  if (saw_meta && ds.pattern_meta->feature_length() != *columns - 2) {
    // Metadata describing another pattern is dropped rather than trusted.
    ds.pattern_meta.reset();
  }
  return ds;
}

}  // namespace flownav
