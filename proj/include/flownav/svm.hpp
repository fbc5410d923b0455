#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "flownav/error.hpp"
#include "flownav/features.hpp"
#include "flownav/kernel.hpp"
#include "flownav/smo.hpp"

namespace flownav {

// Solver state at fit time; kept in memory only, never written to model files.
struct TrainingDiagnostics {
  std::vector<double> dual;  // alpha per training sample (SVR: alpha then alpha*)
  double dual_objective = 0.0;
  double kkt_violation = 0.0;
  double equality_residual = 0.0;
  std::size_t iterations = 0;
};

struct ClassWeights {
  double negative = 1.0;
  double positive = 1.0;

  double of(int label) const noexcept { return label > 0 ? positive : negative; }
  bool operator==(const ClassWeights&) const = default;
};

// n / (2 n_y) per class; 1 for both when unbalanced.
inline ClassWeights balanced_class_weights(const Dataset& ds, bool balanced) {
  if (!balanced) return {};
  const double n = static_cast<double>(ds.size());
  const double n_pos = static_cast<double>(ds.count_label(+1));
  const double n_neg = static_cast<double>(ds.count_label(-1));
  return {n / (2.0 * n_neg), n / (2.0 * n_pos)};
}

inline void require_both_classes(const Dataset& ds) {
  if (ds.count_label(+1) == 0 || ds.count_label(-1) == 0) {
    throw Error(ErrorKind::SingleClass, "training data must contain both classes");
  }
}

inline std::vector<FeatureVector> scale_all(const Dataset& ds, const Scaler& scaler) {
  std::vector<FeatureVector> out;
  out.reserve(ds.size());
  for (const auto& s : ds.samples) out.push_back(scaler.apply(s.features));
  return out;
}

struct SvmParams {
  double C = 10.0;
  double gamma = 1.0 / 202.0;
  bool balanced = true;
  double tolerance = 1e-3;
  std::size_t max_iterations = 0;  // 0: solver default
};

struct SvmModel {
  std::vector<FeatureVector> support_vectors;  // already scaled
  std::vector<double> coefs;                   // alpha_i * y_i
  double bias = 0.0;
  KernelParams kernel;
  double C = 0.0;
  ClassWeights class_weights;
  Scaler scaler;
  TrainingDiagnostics diagnostics;  // not persisted

  std::size_t dimension() const noexcept { return scaler.dimension(); }
};

struct Prediction {
  int label = -1;
  double decision_value = 0.0;
};

// Decision value on an already scaled vector.
inline double svm_decision_scaled(const SvmModel& model, std::span<const double> scaled) {
  double f = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    f += model.coefs[i] * rbf(model.support_vectors[i], scaled, model.kernel.gamma);
  }
  return f;
}

// Ties (decision value exactly 0) go to -1.
inline Prediction predict_svm(const SvmModel& model, std::span<const double> x) {
  const double f = svm_decision_scaled(model, model.scaler.apply(x));
  return {f > 0.0 ? +1 : -1, f};
}

inline SvmModel train_svm(const Dataset& ds, const SvmParams& params = {}, SmoOptions options = {}) {
  if (!(params.C > 0.0) || !(params.gamma > 0.0)) {
    throw Error(ErrorKind::NonPositiveHyperparameter, "C and gamma must be > 0");
  }
  ds.validate();
  require_both_classes(ds);

  SvmModel model;
  model.scaler = fit_scaler(ds);
  model.kernel.gamma = params.gamma;
  model.C = params.C;
  model.class_weights = balanced_class_weights(ds, params.balanced);

  const auto x = scale_all(ds, model.scaler);
  const std::size_t n = x.size();
  std::vector<int> y(n);
  std::vector<double> p(n, -1.0);
  std::vector<double> upper(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = ds.samples[i].label;
    upper[i] = params.C * model.class_weights.of(y[i]);
  }

  const double gamma = params.gamma;
  RowCache q(n, [&](std::size_t i, std::size_t j) { return y[i] * y[j] * rbf(x[i], x[j], gamma); });
  options.tolerance = params.tolerance;
  if (params.max_iterations > 0) options.max_iterations = params.max_iterations;
  const SmoResult r = solve_smo(q, y, p, upper, options);

  for (std::size_t i = 0; i < n; ++i) {
    if (r.alpha[i] > 0.0) {
      model.support_vectors.push_back(x[i]);
      model.coefs.push_back(r.alpha[i] * y[i]);
    }
  }
  model.bias = -r.rho;
  model.diagnostics = {r.alpha, r.dual_objective, r.kkt_violation, r.equality_residual, r.iterations};
  return model;
}

}  // namespace flownav
