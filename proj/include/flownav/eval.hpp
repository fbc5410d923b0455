#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "flownav/features.hpp"
#include "flownav/flow.hpp"
#include "flownav/learn.hpp"
#include "flownav/rng.hpp"

namespace flownav {

// Positive class is +1 (obstacle).
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }

  void add(int truth, int predicted) {
    if (truth > 0) (predicted > 0 ? tp : fn) += 1;
    else (predicted > 0 ? fp : tn) += 1;
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

// nullopt means Undefined (rendered "-").
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_measure;
  std::optional<double> accuracy;

  bool operator==(const Metrics&) const = default;
};

inline Metrics metrics_from_cm(const ConfusionMatrix& cm) {
  Metrics m;
  if (cm.tp + cm.fp > 0) m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (m.precision && m.recall && (*m.precision > 0.0 || *m.recall > 0.0)) {
    m.f_measure = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  if (cm.total() > 0) m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  return m;
}

// ---------------------------------------------------------------------------
// Folds

// Stratified k-fold. Each class is shuffled and dealt round-robin; the deal
// position carries over from one class to the next so total fold sizes stay
// within one of each other as well. Indices within a fold are ascending.
inline std::vector<std::vector<std::size_t>> kfold_indices(std::span<const int> labels, std::size_t k,
                                                           std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be at least 2");
  if (labels.size() < k) throw Error(ErrorKind::TooFewSamples, "fewer samples than folds");
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  if (neg.size() < k || pos.size() < k) {
    throw Error(ErrorKind::TooFewPerClass, "each class needs at least k samples for stratified folds");
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t deal = 0;
  for (auto* cls : {&neg, &pos}) {
    rng.shuffle(std::span<std::size_t>(*cls));
    for (std::size_t idx : *cls) folds[deal++ % k].push_back(idx);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// Unstratified variant: one shuffle of all indices, dealt round-robin.
inline std::vector<std::vector<std::size_t>> shuffled_kfold_indices(std::size_t n, std::size_t k,
                                                                    std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be at least 2");
  if (n < k) throw Error(ErrorKind::TooFewSamples, "fewer samples than folds");
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(all));
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(all[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// Indices of every fold except `held_out`, ascending.
inline std::vector<std::size_t> training_indices(const std::vector<std::vector<std::size_t>>& folds,
                                                 std::size_t held_out) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != held_out) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Trainers

enum class TrainerKind { Svm, Perceptron, Svr };

inline std::string_view to_string(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::Svm: return "svm";
    case TrainerKind::Perceptron: return "perceptron";
    case TrainerKind::Svr: return "svr";
  }
  return "?";
}

struct SvmGrid {
  std::vector<double> C{0.1, 1.0, 10.0, 100.0};
  std::vector<double> gamma{0.001, 0.005, 1.0 / 202.0, 0.05};
};

struct TrainerSpec {
  TrainerKind kind = TrainerKind::Svm;
  SvmParams svm;
  PerceptronParams perceptron;
  SvrParams svr;
  std::optional<SvmGrid> grid;  // SVM only: pick C, gamma by inner CV on the training folds
};

inline std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) { return hash_combine(seed, fold); }

inline int predict_label(const AnyModel& model, std::span<const double> x, double threshold_cm) {
  return std::visit(
      [&](const auto& m) -> int {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SvmModel>) return predict_svm(m, x).label;
        else if constexpr (std::is_same_v<M, PerceptronModel>) return predict_perceptron(m, x).label;
        else return classify_svr(m, x, threshold_cm);
      },
      model);
}

inline ConfusionMatrix evaluate(const AnyModel& model, const Dataset& test) {
  ConfusionMatrix cm;
  for (const auto& s : test.samples) cm.add(s.label, predict_label(model, s.features, test.threshold_cm));
  return cm;
}

struct GridChoice {
  SvmParams params;
  std::optional<double> mean_f;  // inner-CV mean F-measure of the chosen pair
};

inline GridChoice select_svm_params(const Dataset& train, const SvmParams& base, const SvmGrid& grid,
                                    std::size_t k, std::uint64_t seed);

inline AnyModel train_model(const Dataset& train, const TrainerSpec& spec, std::uint64_t seed,
                            std::size_t inner_k = 8, GridChoice* choice = nullptr) {
  switch (spec.kind) {
    case TrainerKind::Svm: {
      SvmParams params = spec.svm;
      if (spec.grid) {
        const GridChoice c = select_svm_params(train, spec.svm, *spec.grid, inner_k, seed);
        params = c.params;
        if (choice) *choice = c;
      }
      return train_svm(train, params);
    }
    case TrainerKind::Perceptron: {
      PerceptronParams params = spec.perceptron;
      params.seed = seed;
      return train_perceptron(train, params);
    }
    case TrainerKind::Svr:
      return train_svr(train, spec.svr);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown trainer");
}

// ---------------------------------------------------------------------------
// Aggregation

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> std;  // sample std (n - 1); needs two defined folds
  std::size_t excluded = 0;   // folds where the metric was Undefined
};

inline MetricSummary summarize(const std::vector<std::optional<double>>& values) {
  MetricSummary s;
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) defined.push_back(*v);
    else ++s.excluded;
  }
  if (defined.empty()) return s;
  double sum = 0.0;
  for (double v : defined) sum += v;
  const double mean = sum / static_cast<double>(defined.size());
  s.mean = mean;
  if (defined.size() >= 2) {
    double ss = 0.0;
    for (double v : defined) ss += (v - mean) * (v - mean);
    s.std = std::sqrt(ss / static_cast<double>(defined.size() - 1));
  }
  return s;
}

struct CvReport {
  TrainerKind trainer = TrainerKind::Svm;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<ConfusionMatrix> confusion;
  std::vector<Metrics> per_fold;
  std::vector<GridChoice> chosen;  // grid search only, one per fold
  MetricSummary precision, recall, f_measure, accuracy;

  bool operator==(const CvReport& o) const {
    auto same = [](const MetricSummary& a, const MetricSummary& b) {
      return a.mean == b.mean && a.std == b.std && a.excluded == b.excluded;
    };
    return trainer == o.trainer && k == o.k && seed == o.seed && stratified == o.stratified && confusion == o.confusion &&
           per_fold == o.per_fold && same(precision, o.precision) && same(recall, o.recall) &&
           same(f_measure, o.f_measure) && same(accuracy, o.accuracy);
  }
};

inline void finalize_report(CvReport& r) {
  std::vector<std::optional<double>> p, rc, f, a;
  for (const auto& m : r.per_fold) {
    p.push_back(m.precision);
    rc.push_back(m.recall);
    f.push_back(m.f_measure);
    a.push_back(m.accuracy);
  }
  r.precision = summarize(p);
  r.recall = summarize(rc);
  r.f_measure = summarize(f);
  r.accuracy = summarize(a);
}

struct CvOptions {
  std::size_t k = 8;
  std::uint64_t seed = 42;
  unsigned jobs = 1;  // folds run on this many threads; results do not depend on it
  bool stratified = true;
};

// Model trained for one outer fold: scaler and model see only the other folds.
inline AnyModel fit_fold(const Dataset& ds, const std::vector<std::vector<std::size_t>>& folds, std::size_t fold,
                         const TrainerSpec& spec, std::uint64_t seed, std::size_t k,
                         GridChoice* choice = nullptr) {
  const auto train = ds.subset(training_indices(folds, fold));
  return train_model(train, spec, fold_seed(seed, fold), k, choice);
}

inline CvReport cross_validate(const Dataset& ds, const TrainerSpec& spec, const CvOptions& options = {}) {
  ds.validate();
  const auto labels = ds.labels();
  const auto folds = options.stratified ? kfold_indices(labels, options.k, options.seed)
                                         : shuffled_kfold_indices(labels.size(), options.k, options.seed);

  CvReport report;
  report.trainer = spec.kind;
  report.k = options.k;
  report.seed = options.seed;
  report.stratified = options.stratified;
  report.confusion.resize(options.k);
  report.per_fold.resize(options.k);
  if (spec.grid && spec.kind == TrainerKind::Svm) report.chosen.resize(options.k);

  std::vector<std::exception_ptr> errors(options.k);
  auto run_fold = [&](std::size_t f) {
    try {
      GridChoice* choice = report.chosen.empty() ? nullptr : &report.chosen[f];
      const AnyModel model = fit_fold(ds, folds, f, spec, options.seed, options.k, choice);
      report.confusion[f] = evaluate(model, ds.subset(folds[f]));
      report.per_fold[f] = metrics_from_cm(report.confusion[f]);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  const unsigned jobs = std::max(1u, options.jobs);
  if (jobs == 1) {
    for (std::size_t f = 0; f < options.k; ++f) run_fold(f);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t f = t; f < options.k; f += jobs) run_fold(f);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  finalize_report(report);
  return report;
}

// Best mean F-measure over the grid by inner stratified CV on `train` alone.
// Undefined F counts below every defined value; ties keep grid order.
inline GridChoice select_svm_params(const Dataset& train, const SvmParams& base, const SvmGrid& grid,
                                    std::size_t k, std::uint64_t seed) {
  const auto labels = train.labels();
  const std::size_t smallest = std::min(train.count_label(+1), train.count_label(-1));
  const std::size_t inner_k = std::min(k, smallest);
  const auto folds = kfold_indices(labels, inner_k, hash_combine(seed, 0x6772696400ULL));

  std::vector<Dataset> inner_train, inner_test;
  for (std::size_t f = 0; f < inner_k; ++f) {
    inner_train.push_back(train.subset(training_indices(folds, f)));
    inner_test.push_back(train.subset(folds[f]));
  }

  GridChoice best{base, std::nullopt};
  bool have = false;
  for (double c : grid.C) {
    for (double g : grid.gamma) {
      SvmParams p = base;
      p.C = c;
      p.gamma = g;
      std::vector<std::optional<double>> f_values;
      for (std::size_t f = 0; f < inner_k; ++f) {
        const AnyModel m = train_svm(inner_train[f], p);
        f_values.push_back(metrics_from_cm(evaluate(m, inner_test[f])).f_measure);
      }
      const auto mean_f = summarize(f_values).mean;
      const bool better = !have || (mean_f && (!best.mean_f || *mean_f > *best.mean_f));
      if (better) {
        best = {p, mean_f};
        have = true;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string format_percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
  return buf;
}

inline std::string format_mean_std(const MetricSummary& s) {
  if (!s.mean) return "-";
  char buf[64];
  if (s.std) std::snprintf(buf, sizeof buf, "%.2f±%.2f%%", 100.0 * *s.mean, 100.0 * *s.std);
  else std::snprintf(buf, sizeof buf, "%.2f±-%%", 100.0 * *s.mean);
  return buf;
}

inline std::string format_fraction(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

inline void write_report_table(std::ostream& out, const CvReport& r) {
  char line[160];
  std::snprintf(line, sizeof line, "%s, %zu-fold %s CV, seed %llu\n", std::string(to_string(r.trainer)).c_str(), r.k,
                r.stratified ? "stratified" : "shuffled", static_cast<unsigned long long>(r.seed));
  out << line;
  std::snprintf(line, sizeof line, "%-6s %12s %12s %12s %12s   %s\n", "fold", "precision", "recall", "f_measure",
                "accuracy", "tp/fp/fn/tn");
  out << line;
  for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
    const auto& m = r.per_fold[f];
    const auto& cm = r.confusion[f];
    std::snprintf(line, sizeof line, "%-6zu %12s %12s %12s %12s   %zu/%zu/%zu/%zu\n", f,
                  format_percent(m.precision).c_str(), format_percent(m.recall).c_str(),
                  format_percent(m.f_measure).c_str(), format_percent(m.accuracy).c_str(), cm.tp, cm.fp, cm.fn, cm.tn);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-6s %12s %12s %12s %12s\n", "mean", format_mean_std(r.precision).c_str(),
                format_mean_std(r.recall).c_str(), format_mean_std(r.f_measure).c_str(),
                format_mean_std(r.accuracy).c_str());
  out << line;
  const std::size_t ex[] = {r.precision.excluded, r.recall.excluded, r.f_measure.excluded, r.accuracy.excluded};
  if (ex[0] + ex[1] + ex[2] + ex[3] > 0) {
    std::snprintf(line, sizeof line, "undefined folds excluded: precision %zu, recall %zu, f_measure %zu, accuracy %zu\n",
                  ex[0], ex[1], ex[2], ex[3]);
    out << line;
  }
  for (std::size_t f = 0; f < r.chosen.size(); ++f) {
    std::snprintf(line, sizeof line, "fold %zu grid choice: C=%g gamma=%g inner_f=%s\n", f, r.chosen[f].params.C,
                  r.chosen[f].params.gamma, format_fraction(r.chosen[f].mean_f).c_str());
    out << line;
  }
}

// fold,precision,recall,f_measure,accuracy with "-" for Undefined, then mean and std rows.
inline void write_report_csv(std::ostream& out, const CvReport& r) {
  out << "fold,precision,recall,f_measure,accuracy\n";
  for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
    const auto& m = r.per_fold[f];
    out << f << ',' << format_fraction(m.precision) << ',' << format_fraction(m.recall) << ','
        << format_fraction(m.f_measure) << ',' << format_fraction(m.accuracy) << '\n';
  }
  out << "mean," << format_fraction(r.precision.mean) << ',' << format_fraction(r.recall.mean) << ','
      << format_fraction(r.f_measure.mean) << ',' << format_fraction(r.accuracy.mean) << '\n';
  out << "std," << format_fraction(r.precision.std) << ',' << format_fraction(r.recall.std) << ','
      << format_fraction(r.f_measure.std) << ',' << format_fraction(r.accuracy.std) << '\n';
}

// ---------------------------------------------------------------------------
// Throughput

struct StageTiming {
  std::string stage;
  double mean_ms = 0.0;
};

struct BenchReport {
  std::vector<StageTiming> stages;  // pyramid, lk, features, predict
  double total_ms = 0.0;            // mean wall time per frame pair, measured around all stages
  double fps = 0.0;                 // 1000 / total_ms
  std::size_t pairs = 0;
};

// Times the per-frame pipeline over consecutive frame pairs. The previous
// pyramid is carried over, so each pair pays for one pyramid build as a live
// loop would. File I/O is outside the timed region.
inline BenchReport bench_throughput(const std::vector<GrayImage>& frames, const SamplePattern& pattern,
                                    const LKParams& lk, const SvmModel& model, std::size_t repetitions = 1) {
  if (frames.size() < 2) throw Error(ErrorKind::TooFewFrames, "benchmark needs at least two frames");
  if (repetitions == 0) throw Error(ErrorKind::InvalidArgument, "repetitions must be >= 1");
  lk.validate();
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

  double t_pyr = 0, t_lk = 0, t_feat = 0, t_pred = 0, t_total = 0;
  std::size_t pairs = 0;
  volatile double sink = 0.0;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    Pyramid prev = build_pyramid(frames[0], lk.pyramid_levels);
    for (std::size_t i = 1; i < frames.size(); ++i) {
      const auto t0 = clock::now();
      Pyramid next = build_pyramid(frames[i], lk.pyramid_levels);
      const auto t1 = clock::now();
      const FlowField field = lucas_kanade(prev, next, pattern, lk);
      const auto t2 = clock::now();
      const FeatureVector x = extract_features(field);
      const auto t3 = clock::now();
      const Prediction p = predict_svm(model, x);
      const auto t4 = clock::now();
      sink = sink + p.decision_value;
      prev = std::move(next);
      t_pyr += ms(t1 - t0);
      t_lk += ms(t2 - t1);
      t_feat += ms(t3 - t2);
      t_pred += ms(t4 - t3);
      t_total += ms(t4 - t0);
      ++pairs;
    }
  }
  BenchReport r;
  r.pairs = pairs;
  const double n = static_cast<double>(pairs);
  r.stages = {{"pyramid", t_pyr / n}, {"lk", t_lk / n}, {"features", t_feat / n}, {"predict", t_pred / n}};
  r.total_ms = t_total / n;
  r.fps = r.total_ms > 0.0 ? 1000.0 / r.total_ms : 0.0;
  return r;
}

inline void write_bench_csv(std::ostream& out, const BenchReport& r) {
  out << "stage,mean_ms,fps\n";
  char line[96];
  for (const auto& s : r.stages) {
    std::snprintf(line, sizeof line, "%s,%.4f,%.2f\n", s.stage.c_str(), s.mean_ms,
                  s.mean_ms > 0 ? 1000.0 / s.mean_ms : 0.0);
    out << line;
  }
  std::snprintf(line, sizeof line, "total,%.4f,%.2f\n", r.total_ms, r.fps);
  out << line;
}

}  // namespace flownav
