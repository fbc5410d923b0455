#pragma once

// Recomputes the dual optimality conditions of a trained model from scratch:
// decision values come from the public predict functions, multipliers from the
// solver diagnostics.

#include <algorithm>
#include <cmath>

#include "flownav/svm.hpp"
#include "flownav/svr.hpp"

namespace flownav::fixtures {

struct KktReport {
  double worst = 0;      // largest stationarity/complementarity violation
  double equality = 0;   // |sum y_i a_i| or |sum coef_i|
  bool box_ok = true;    // 0 <= a_i <= upper_i, nonzero coefs within bound
};

inline KktReport svm_kkt(const SvmModel& m, const Dataset& ds) {
  KktReport r;
  const auto& a = m.diagnostics.dual;
  double eq = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int y = ds.samples[i].label;
    const double upper = m.C * m.class_weights.of(y);
    const double margin = y * predict_svm(m, ds.samples[i].features).decision_value;
    if (a[i] < 0 || a[i] > upper) r.box_ok = false;
    eq += y * a[i];
    double v;
    if (a[i] <= 0) v = std::max(0.0, 1.0 - margin);
    else if (a[i] >= upper) v = std::max(0.0, margin - 1.0);
    else v = std::abs(margin - 1.0);
    r.worst = std::max(r.worst, v);
  }
  for (std::size_t s = 0; s < m.coefs.size(); ++s) {
    const double c = std::abs(m.coefs[s]);
    const double bound = m.C * std::max(m.class_weights.negative, m.class_weights.positive);
    if (!(c > 0 && c <= bound)) r.box_ok = false;
  }
  r.equality = std::abs(eq);
  return r;
}

inline KktReport svr_kkt(const SvrModel& m, const Dataset& ds) {
  KktReport r;
  const auto& a = m.diagnostics.dual;
  const std::size_t n = ds.size();
  double eq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = predict_svr(m, ds.samples[i].features);
    const double z = *ds.samples[i].distance_cm;
    const double up = z - f;   // alpha side: z - f <= eps when alpha = 0
    const double down = f - z;  // alpha* side
    for (auto [alpha, resid] : {std::pair{a[i], up}, std::pair{a[i + n], down}}) {
      if (alpha < 0 || alpha > m.C) r.box_ok = false;
      double v;
      if (alpha <= 0) v = std::max(0.0, resid - m.epsilon);
      else if (alpha >= m.C) v = std::max(0.0, m.epsilon - resid);
      else v = std::abs(resid - m.epsilon);
      r.worst = std::max(r.worst, v);
    }
    eq += a[i] - a[i + n];
  }
  for (double c : m.coefs)
    if (!(std::abs(c) <= m.C)) r.box_ok = false;
  r.equality = std::abs(eq);
  return r;
}

}  // namespace flownav::fixtures
