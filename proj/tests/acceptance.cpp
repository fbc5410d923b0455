// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
//
//   acceptance [--strict]
//
// Without --strict the exit status is 0 whenever every check ran to completion,
// so a criterion that fails on this host is reported rather than aborting the
// suite. --strict exits 1 if any line is FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flownav/eval.hpp"
#include "flownav/nav.hpp"
#include "kkt_check.hpp"
#include "qp_oracle.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace flownav;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every trained SVM/SVR passes through here.
struct KktLedger {
  std::size_t trainings = 0;
  double worst = 0.0;
  double equality = 0.0;
  bool box_ok = true;

  void add(const fixtures::KktReport& r) {
    ++trainings;
    worst = std::max(worst, r.worst);
    equality = std::max(equality, r.equality);
    box_ok = box_ok && r.box_ok;
  }
} kkt;

// ---------------------------------------------------------------------------

void lk_correctness() {
  const auto t0 = clock_type::now();
  const SamplePattern pattern = generate_pattern(320, 240);
  std::size_t pairs = 0, pairs_ok = 0;
  double worst_fraction = 1.0;
  double identical_max = 0.0;
  for (std::uint64_t img = 0; img < 20; ++img) {
    const GrayImage base = fixtures::smooth_texture(320, 240, 1000 + img);
    const FlowField still = lucas_kanade(base, base, pattern);
    for (const auto& v : still.vectors) identical_max = std::max({identical_max, std::abs(v.u1), std::abs(v.u2)});
    for (int dy = -5; dy <= 5; ++dy) {
      for (int dx = -5; dx <= 5; ++dx) {
        const FlowField f = lucas_kanade(base, fixtures::translate(base, dx, dy), pattern);
        std::size_t tracked = 0, good = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
          if (f.status[i] != TrackStatus::Tracked) continue;
          ++tracked;
          if (std::hypot(f.vectors[i].u1 - dx, f.vectors[i].u2 - dy) <= 0.2) ++good;
        }
        const double fraction = tracked ? static_cast<double>(good) / tracked : 0.0;
        worst_fraction = std::min(worst_fraction, fraction);
        ++pairs;
        if (tracked > 0 && fraction >= 0.95) ++pairs_ok;
      }
    }
  }
  const double secs = seconds_since(t0);
  report("lk_correctness", pairs_ok == pairs && identical_max < 1e-6 && secs < 30.0,
         fmt("%zu/%zu image-shift pairs with >=95%% of tracked points within 0.2 px (worst %.3f); "
             "identical-frame max |flow| %.2e; %.1f s",
             pairs_ok, pairs, worst_fraction, identical_max, secs));
}

// ---------------------------------------------------------------------------
// Small-set SMO against an accelerated projected-gradient oracle.

struct Scaled {
  std::vector<std::vector<double>> rows;
  std::vector<double> lo, hi;
};

Scaled scale_rows(const Dataset& ds) {
  const std::size_t d = ds.dimension();
  Scaled s{{}, std::vector<double>(d, INFINITY), std::vector<double>(d, -INFINITY)};
  for (const auto& x : ds.samples)
    for (std::size_t k = 0; k < d; ++k) {
      s.lo[k] = std::min(s.lo[k], x.features[k]);
      s.hi[k] = std::max(s.hi[k], x.features[k]);
    }
  for (const auto& x : ds.samples) {
    std::vector<double> r(d);
    for (std::size_t k = 0; k < d; ++k) r[k] = s.hi[k] > s.lo[k] ? (x.features[k] - s.lo[k]) / (s.hi[k] - s.lo[k]) : 0.0;
    s.rows.push_back(r);
  }
  return s;
}

oracle::Matrix gram(const std::vector<std::vector<double>>& x, double gamma) {
  oracle::Matrix k(x.size(), std::vector<double>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) k[i][j] = oracle::gauss_kernel(x[i], x[j], gamma);
  return k;
}

// Raw-space probe points: a 10x10 grid over the first two scaled coordinates
// (extending a little past the training box), the rest held at 0.37.
std::vector<FeatureVector> probe_grid(const Scaled& s) {
  const std::size_t d = s.lo.size();
  std::vector<FeatureVector> out;
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) {
      std::vector<double> u(d, 0.37);
      u[0] = -0.13 + 0.137 * a;
      if (d > 1) u[1] = -0.11 + 0.131 * b;
      FeatureVector raw(d);
      for (std::size_t k = 0; k < d; ++k) raw[k] = s.lo[k] + u[k] * (s.hi[k] - s.lo[k]);
      out.push_back(raw);
    }
  return out;
}

std::vector<double> scale_with(const Scaled& s, const FeatureVector& x) {
  std::vector<double> r(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) r[k] = s.hi[k] > s.lo[k] ? (x[k] - s.lo[k]) / (s.hi[k] - s.lo[k]) : 0.0;
  return r;
}

// SVR intercept from the oracle multipliers: free alpha_i gives z_i - s_i - eps,
// free alpha*_i gives z_i - s_i + eps; otherwise the middle of the feasible interval.
double svr_bias(const oracle::Matrix& k, const std::vector<double>& a, const std::vector<double>& z, double c,
                double eps) {
  const std::size_t n = z.size();
  double sum = 0, lo = -INFINITY, hi = INFINITY;
  int free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += (a[j] - a[j + n]) * k[i][j];
    const double up = z[i] - s - eps, down = z[i] - s + eps;
    const double ai = a[i], as = a[i + n], tol = 1e-9;
    if (ai > tol && ai < c - tol) sum += up, ++free;
    if (as > tol && as < c - tol) sum += down, ++free;
    // f_i - z_i <= eps and z_i - f_i <= eps where the multipliers sit at 0.
    if (ai <= tol) lo = std::max(lo, up);
    if (ai >= c - tol) hi = std::min(hi, up);
    if (as <= tol) hi = std::min(hi, down);
    if (as >= c - tol) lo = std::max(lo, down);
  }
  if (free > 0) return sum / free;
  if (!std::isfinite(lo)) return hi;
  if (!std::isfinite(hi)) return lo;
  return 0.5 * (lo + hi);
}

void smo_oracle() {
  const auto t0 = clock_type::now();
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cs[] = {0.1, 1.0, 10.0};
  const double gammas[] = {0.5, 1.0, 4.0};

  int svc_ok = 0, svc_total = 0, probe_disagree = 0, tight_disagree = 0;
  double svc_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const std::size_t dim = 2 + trial % 4;
    Dataset ds;
    do {
      ds.samples.clear();
      for (std::size_t i = 0; i < n; ++i) {
        FeatureVector x(dim);
        for (auto& v : x) v = u(gen);
        ds.samples.push_back({x, u(gen) < 0.5 ? -1 : +1, std::nullopt});
      }
    } while (ds.count_label(1) == 0 || ds.count_label(-1) == 0);
    const double c = cs[trial % 3], gamma = gammas[(trial / 3) % 3];

    const Scaled s = scale_rows(ds);
    const auto k = gram(s.rows, gamma);
    std::vector<int> y;
    for (const auto& x : ds.samples) y.push_back(x.label);
    const double n_pos = static_cast<double>(ds.count_label(1)), n_neg = static_cast<double>(ds.count_label(-1));
    std::vector<double> upper(n), p(n, -1.0);
    for (std::size_t i = 0; i < n; ++i) upper[i] = c * n / (2.0 * (y[i] > 0 ? n_pos : n_neg));
    oracle::Matrix q(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) q[i][j] = y[i] * y[j] * k[i][j];
    const auto sol = oracle::projected_gradient(q, p, y, upper, 1e-8);
    const double b = oracle::svc_bias(k, sol.alpha, y, upper);

    const SvmModel m = train_svm(ds, {.C = c, .gamma = gamma});
    kkt.add(fixtures::svm_kkt(m, ds));
    const double gap = std::abs(m.diagnostics.dual_objective - sol.objective);
    svc_gap = std::max(svc_gap, gap);
    // The verdict uses the default stop; the tight-stop count shows how many
    // flips come from decision values below the 1e-3 stopping tolerance.
    const SvmModel tight = train_svm(ds, {.C = c, .gamma = gamma, .tolerance = 1e-10});
    kkt.add(fixtures::svm_kkt(tight, ds));
    int disagree = 0;
    for (const auto& raw : probe_grid(s)) {
      const auto z = scale_with(s, raw);
      double f = b;
      for (std::size_t i = 0; i < n; ++i) f += sol.alpha[i] * y[i] * oracle::gauss_kernel(s.rows[i], z, gamma);
      const int expected = f > 0 ? 1 : -1;
      if (expected != predict_svm(m, raw).label) ++disagree;
      if (expected != predict_svm(tight, raw).label) ++tight_disagree;
    }
    probe_disagree += disagree;
    ++svc_total;
    if (gap <= 1e-3 && disagree == 0) ++svc_ok;
  }

  int svr_ok = 0, svr_total = 0, svr_disagree = 0;
  double svr_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const std::size_t dim = 2 + trial % 4;
    Dataset ds;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
      FeatureVector x(dim);
      for (auto& v : x) v = u(gen);
      z[i] = 100.0 * u(gen);
      ds.samples.push_back({x, z[i] < kDefaultThresholdCm ? 1 : -1, z[i]});
    }
    const double c = trial % 2 ? 1.0 : 20.0, gamma = gammas[trial % 3], eps = 2.0;
    const Scaled s = scale_rows(ds);
    const auto k = gram(s.rows, gamma);
    oracle::Matrix q(2 * n, std::vector<double>(2 * n));
    std::vector<int> y(2 * n);
    std::vector<double> p(2 * n), upper(2 * n, c);
    for (std::size_t i = 0; i < 2 * n; ++i) {
      y[i] = i < n ? 1 : -1;
      p[i] = i < n ? eps - z[i] : eps + z[i - n];
    }
    for (std::size_t i = 0; i < 2 * n; ++i)
      for (std::size_t j = 0; j < 2 * n; ++j) q[i][j] = y[i] * y[j] * k[i % n][j % n];
    const auto sol = oracle::projected_gradient(q, p, y, upper, 1e-8);
    const double b = svr_bias(k, sol.alpha, z, c, eps);

    const SvrModel m = train_svr(ds, {.C = c, .gamma = gamma, .epsilon = eps});
    std::vector<double> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    kkt.add(fixtures::svr_kkt(m, ds));
    const double gap = std::abs(m.diagnostics.dual_objective - sol.objective);
    svr_gap = std::max(svr_gap, gap);
    int disagree = 0;
    for (const auto& raw : probe_grid(s)) {
      const auto zz = scale_with(s, raw);
      double f = b;
      for (std::size_t i = 0; i < n; ++i) f += (sol.alpha[i] - sol.alpha[i + n]) * oracle::gauss_kernel(s.rows[i], zz, gamma);
      const int oracle_label = f <= median ? 1 : -1;
      const int label = classify_svr(m, raw, median);
      if (oracle_label != label) ++disagree;
    }
    svr_disagree += disagree;
    ++svr_total;
    if (gap <= 1e-3 && disagree == 0) ++svr_ok;
  }
  const double secs = seconds_since(t0);
  report("smo_oracle", svc_ok == svc_total && svr_ok == svr_total && secs < 60.0,
         fmt("C-SVC %d/%d sets (max |dual gap| %.2e, %d probe disagreements; %d when solved to a 1e-10 stop); "
             "eps-SVR %d/%d sets (max |dual gap| %.2e, %d probe disagreements); %.1f s",
             svc_ok, svc_total, svc_gap, probe_disagree, tight_disagree, svr_ok, svr_total, svr_gap, svr_disagree,
             secs));
}

// ---------------------------------------------------------------------------

struct HandCase {
  ConfusionMatrix cm;
  const char* precision;
  const char* recall;
  const char* f_measure;
  const char* accuracy;
};

void metric_formulas() {
  // Expected strings worked out by hand from tp/fp/fn/tn.
  const HandCase cases[] = {
      {{5, 1, 2, 12}, "83.33%", "71.43%", "76.92%", "85.00%"},   // P 5/6, R 5/7, F 10/13, A 17/20
      {{10, 0, 0, 10}, "100.00%", "100.00%", "100.00%", "100.00%"},
      {{0, 0, 4, 56}, "-", "0.00%", "-", "93.33%"},               // never predicts positive
      {{0, 3, 0, 7}, "0.00%", "-", "-", "70.00%"},                // no positives in the fold
      {{0, 0, 0, 9}, "-", "-", "-", "100.00%"},
      {{3, 3, 3, 3}, "50.00%", "50.00%", "50.00%", "50.00%"},
      {{1, 2, 0, 0}, "33.33%", "100.00%", "50.00%", "33.33%"},   // F = 2(1/3)/(4/3) = 1/2
      {{7, 1, 1, 51}, "87.50%", "87.50%", "87.50%", "96.67%"},   // A 58/60
      {{0, 5, 5, 0}, "0.00%", "0.00%", "-", "0.00%"},             // P = R = 0
      {{2, 6, 1, 50}, "25.00%", "66.67%", "36.36%", "88.14%"},   // F 4/11, A 52/59
      {{50, 10, 5, 407}, "83.33%", "90.91%", "86.96%", "96.82%"},  // F 20/23, A 457/472
      {{1, 0, 0, 0}, "100.00%", "100.00%", "100.00%", "100.00%"},
  };
  int ok = 0, total = 0;
  std::string first_bad;
  for (const auto& c : cases) {
    ++total;
    const Metrics m = metrics_from_cm(c.cm);
    const bool same = format_percent(m.precision) == c.precision && format_percent(m.recall) == c.recall &&
                      format_percent(m.f_measure) == c.f_measure && format_percent(m.accuracy) == c.accuracy;
    if (same) ++ok;
    else if (first_bad.empty())
      first_bad = fmt("; mismatch at tp/fp/fn/tn %zu/%zu/%zu/%zu", c.cm.tp, c.cm.fp, c.cm.fn, c.cm.tn);
  }
  // Exact rational checks on the first case.
  const Metrics m = metrics_from_cm({5, 1, 2, 12});
  const bool exact = *m.precision == 5.0 / 6.0 && *m.recall == 5.0 / 7.0 &&
                     std::abs(*m.f_measure - 10.0 / 13.0) < 1e-15 && *m.accuracy == 17.0 / 20.0;
  report("metric_formulas", ok == total && exact,
         fmt("%d/%d hand-computed matrices match, undefined precision renders \"-\"%s", ok, total, first_bad.c_str()));
}

// ---------------------------------------------------------------------------

void fold_laws() {
  std::mt19937_64 gen(42);
  int ok = 0, total = 0;
  while (total < 200) {
    const std::size_t k = 2 + gen() % 9;
    const std::size_t n = k * 2 + gen() % 300;
    const double ratio = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(gen);
    std::vector<int> labels(n);
    for (auto& l : labels) l = std::uniform_real_distribution<double>(0, 1)(gen) < ratio ? 1 : -1;
    const std::size_t pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (pos < k || n - pos < k) continue;  // that configuration is rejected by design
    ++total;
    const auto folds = kfold_indices(labels, k, gen());
    bool good = folds.size() == k;
    std::vector<int> seen(n, 0);
    std::size_t pmin = n, pmax = 0, nmin = n, nmax = 0;
    for (const auto& f : folds) {
      std::size_t fp = 0;
      for (auto i : f) {
        if (i >= n) good = false;
        else {
          ++seen[i];
          fp += labels[i] > 0;
        }
      }
      pmin = std::min(pmin, fp);
      pmax = std::max(pmax, fp);
      nmin = std::min(nmin, f.size() - fp);
      nmax = std::max(nmax, f.size() - fp);
    }
    for (int c : seen) good = good && c == 1;
    good = good && pmax - pmin <= 1 && nmax - nmin <= 1;
    if (good) ++ok;
  }
  report("fold_laws", ok == total, fmt("%d/%d random configurations disjoint, covering, stratified within 1", ok, total));
}

// ---------------------------------------------------------------------------

struct EndToEnd {
  Dataset ds;
  SvmModel nav_model;
};

EndToEnd end_to_end_cv() {
  const SimConfig cfg;
  const LKParams lk;
  const auto pattern = generate_pattern(cfg.width, cfg.height);
  EndToEnd e;
  e.ds = generate_dataset(default_world_script(42), cfg, lk, pattern, kDefaultThresholdCm, 42);

  const auto t0 = clock_type::now();
  TrainerSpec svm;
  svm.grid = SvmGrid{};
  CvOptions opt;  // 8 folds, seed 42, one thread
  const CvReport rs = cross_validate(e.ds, svm, opt);
  const double secs = seconds_since(t0);
  TrainerSpec per;
  per.kind = TrainerKind::Perceptron;
  const CvReport rp = cross_validate(e.ds, per, opt);

  // The navigation criterion steers with the same recipe fitted on every sample.
  GridChoice choice;
  e.nav_model = std::get<SvmModel>(train_model(e.ds, svm, 42, 8, &choice));
  kkt.add(fixtures::svm_kkt(e.nav_model, e.ds));
  for (std::size_t f = 0; f < rs.k; ++f) {
    // Refit each fold's chosen parameters to audit KKT on the fold's training set.
    const auto folds = kfold_indices(e.ds.labels(), opt.k, opt.seed);
    const Dataset train = e.ds.subset(training_indices(folds, f));
    kkt.add(fixtures::svm_kkt(train_svm(train, rs.chosen[f].params), train));
  }

  const double sa = rs.accuracy.mean.value_or(0.0), pa = rp.accuracy.mean.value_or(0.0);
  report("end_to_end_cv", sa >= 0.85 && sa - pa >= 0.10 && secs < 300.0,
         fmt("%zu samples (%zu positive); grid-searched SVM mean accuracy %.4f, Perceptron %.4f, gap %+.4f "
             "(needs >= 0.85 and gap >= 0.10); SVM CV %.1f s",
             e.ds.size(), e.ds.count_label(1), sa, pa, sa - pa, secs));
  return e;
}

void svr_report(const Dataset& ds) {
  TrainerSpec spec;
  spec.kind = TrainerKind::Svr;
  const CvReport r = cross_validate(ds, spec, CvOptions{});
  {
    const auto folds = kfold_indices(ds.labels(), 8, 42);
    const Dataset train = ds.subset(training_indices(folds, 0));
    kkt.add(fixtures::svr_kkt(train_svr(train, spec.svr), train));
  }
  std::ostringstream table;
  write_report_table(table, r);
  std::istringstream in(table.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);

  // title, header, one row per fold, mean, then the exclusion footer when any fold was Undefined
  bool good = lines.size() >= 2 + r.k + 1 && lines[0].find("8-fold") != std::string::npos;
  int undefined = 0;
  std::size_t excluded[4] = {0, 0, 0, 0};
  for (std::size_t f = 0; f < r.k && good; ++f) {
    const Metrics& m = r.per_fold[f];
    std::istringstream cells(lines[2 + f]);
    std::vector<std::string> c;
    for (std::string cell; cells >> cell;) c.push_back(cell);
    good = c.size() == 6 && c[0] == std::to_string(f) && c[1] == format_percent(m.precision) &&
           c[2] == format_percent(m.recall) && c[3] == format_percent(m.f_measure) &&
           c[4] == format_percent(m.accuracy);
    const std::optional<double> vals[] = {m.precision, m.recall, m.f_measure, m.accuracy};
    for (int i = 0; i < 4; ++i) {
      if (vals[i]) continue;
      ++undefined;
      ++excluded[i];
      good = good && c[1 + i] == "-";
    }
  }
  good = good && lines[2 + r.k].rfind("mean", 0) == 0;
  if (undefined > 0) {
    good = good && lines.size() > 3 + r.k &&
           lines[3 + r.k] == fmt("undefined folds excluded: precision %zu, recall %zu, f_measure %zu, accuracy %zu",
                                 excluded[0], excluded[1], excluded[2], excluded[3]);
  }
  good = good && table.str().find("nan") == std::string::npos && table.str().find("inf") == std::string::npos;
  std::ostringstream csv;
  write_report_csv(csv, r);
  good = good && csv.str().find("nan") == std::string::npos;
  report("svr_report", good,
         fmt("%zu-fold SVR table well-formed, %d undefined per-fold entries rendered \"-\", mean accuracy %s, "
             "mean F %s",
             r.k, undefined, format_percent(r.accuracy.mean).c_str(), format_percent(r.f_measure.mean).c_str()));
}

// ---------------------------------------------------------------------------

void navigation(const SvmModel& model) {
  const SimConfig cfg;
  const LKParams lk;
  const auto pattern = generate_pattern(cfg.width, cfg.height);
  int oracle_collisions = 0, svm_collisions = 0, svm_deflections = 0, oracle_deflections = 0;
  std::size_t min_obstacles = 1000;
  std::string worlds;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const World w = navigation_world(hash_combine(42, s));
    min_obstacles = std::min(min_obstacles, w.obstacles.size());
    NavOptions opt;
    opt.seed = hash_combine(42, s);
    const auto ro = run_navigation(w, cfg, lk, pattern, oracle_labeller(w, cfg), opt);
    const auto rs = run_navigation(w, cfg, lk, pattern, model, opt);
    oracle_collisions += ro.summary.collisions;
    oracle_deflections += ro.summary.deflections;
    svm_collisions += rs.summary.collisions;
    svm_deflections += rs.summary.deflections;
    worlds += fmt("%s%zu", s == 1 ? "" : "/", w.obstacles.size());
  }
  report("closed_loop_safety", min_obstacles >= 3 && oracle_collisions == 0 && svm_collisions <= 1,
         fmt("worlds with %s obstacles; oracle %d collisions (%d deflections), SVM %d collisions (%d deflections) "
             "over 3 runs of 200 cycles",
             worlds.c_str(), oracle_collisions, oracle_deflections, svm_collisions, svm_deflections));
}

void throughput(const SvmModel& model) {
  const SimConfig cfg;
  const World w = dataset_world(42, 60, cfg);
  std::vector<GrayImage> frames;
  CameraPose pose;
  for (std::size_t i = 0; i < 60; ++i) {
    frames.push_back(render(w, pose, cfg, frame_noise_seed(42, 0, i)));
    pose = step(pose, NavDecision::forward(), cfg);
  }
  const BenchReport r = bench_throughput(frames, generate_pattern(cfg.width, cfg.height), LKParams{}, model, 5);
  std::string stages;
  for (const auto& s : r.stages) stages += fmt(", %s %.3f ms", s.stage.c_str(), s.mean_ms);
  report("throughput", r.fps >= 15.0 && r.stages.size() == 4,
         fmt("%.1f FPS single-threaded over %zu frame pairs (total %.3f ms%s)", r.fps, r.pairs, r.total_ms,
             stages.c_str()));
}

// ---------------------------------------------------------------------------

int run_cli(const fs::path& dir, const std::string& args) {
  fs::create_directories(dir);
  const std::string cmd = "cd '" + dir.string() + "' && '" FLOWNAV_CLI "' " + args + " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void cli_determinism() {
  // The full default pipeline, run twice from scratch in separate directories.
  const std::vector<std::string> steps = {
      "gen-world --seed 9 --out world.txt",
      "gen-dataset --out data.csv --frames-dir frames",
      "flow --prev frames/run_03/frame_000020.pgm --next frames/run_03/frame_000021.pgm --out flow.txt",
      "train --data data.csv --out svm.model",
      "train --data data.csv --model perceptron --out perceptron.model",
      "train --data data.csv --model svr --out svr.model",
      "cv --data data.csv --model perceptron --jobs 4 --out cv_perceptron.csv",
      "cv --data data.csv --model svr --out cv_svr.csv",
      "predict --model svm.model --data data.csv --out predictions.csv",
      "navigate --world world.txt --model svm.model --frames-dir nav_frames --out trace_svm.csv",
      "navigate --world world.txt --oracle --out trace_oracle.csv",
  };
  const fs::path root = fs::path(FLOWNAV_ACCEPT_WORKDIR) / "determinism";
  fs::remove_all(root);
  std::string failed;
  for (const char* run : {"a", "b"}) {
    for (const auto& s : steps) {
      // Both runs use the same directory name so path arguments echoed in files match.
      const fs::path dir = root / run / "work";
      if (run_cli(dir, s) != 0 && failed.empty()) failed = s;
    }
  }
  std::size_t files = 0, same = 0;
  std::string differ;
  const fs::path a = root / "a" / "work", b = root / "b" / "work";
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    if (rel == "stderr.txt") continue;
    ++files;
    if (fs::exists(b / rel) && slurp(entry.path()) == slurp(b / rel)) ++same;
    else if (differ.empty()) differ = rel.string();
  }
  report("cli_determinism", failed.empty() && files > 0 && same == files,
         fmt("%zu/%zu output files byte-identical across two full pipeline runs%s%s", same, files,
             failed.empty() ? "" : ("; command failed: " + failed).c_str(),
             differ.empty() ? "" : ("; first difference: " + differ).c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const auto t0 = clock_type::now();
  try {
    lk_correctness();
    smo_oracle();
    metric_formulas();
    fold_laws();
    const EndToEnd e = end_to_end_cv();
    svr_report(e.ds);
    report("kkt_invariants", kkt.worst <= 1e-3 && kkt.equality <= 1e-6 && kkt.box_ok,
           fmt("%zu trainings; worst stationarity/complementarity violation %.2e, worst equality residual %.2e, "
               "box %s",
               kkt.trainings, kkt.worst, kkt.equality, kkt.box_ok ? "respected" : "violated"));
    navigation(e.nav_model);
    throughput(e.nav_model);
    cli_determinism();
  } catch (const std::exception& ex) {
    std::printf("FAIL acceptance aborted: %s\n", ex.what());
    return 2;
  }
  std::printf("acceptance complete: %d FAIL, %.0f s\n", failures, seconds_since(t0));
  return strict && failures > 0 ? 1 : 0;
}
