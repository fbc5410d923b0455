#pragma once

#include <span>
#include <vector>

#include "flownav/svm.hpp"

namespace flownav {

struct SvrParams {
  double C = 10.0;
  double gamma = 1.0 / 202.0;
  double epsilon = 1.0;  // tube half-width, cm
  double tolerance = 1e-3;
  std::size_t max_iterations = 0;  // 0: solver default
};

struct SvrModel {
  std::vector<FeatureVector> support_vectors;  // scaled
  std::vector<double> coefs;                   // alpha_i - alpha_i*
  double bias = 0.0;
  KernelParams kernel;
  double C = 0.0;
  double epsilon = 0.0;
  Scaler scaler;
  TrainingDiagnostics diagnostics;

  std::size_t dimension() const noexcept { return scaler.dimension(); }
};

inline double predict_svr(const SvrModel& model, std::span<const double> x) {
  const auto scaled = model.scaler.apply(x);
  double f = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    f += model.coefs[i] * rbf(model.support_vectors[i], scaled, model.kernel.gamma);
  }
  return f;
}

// Regression to label: obstacle when the predicted distance is within the threshold.
inline int classify_svr(const SvrModel& model, std::span<const double> x,
                        double threshold_cm = kDefaultThresholdCm) {
  return predict_svr(model, x) <= threshold_cm ? +1 : -1;
}

// Epsilon-SVR dual over 2n paired variables [alpha; alpha*], targets taken
// from each sample's distance.
inline SvrModel train_svr(const Dataset& ds, const SvrParams& params = {}, SmoOptions options = {}) {
  if (!(params.C > 0.0) || !(params.gamma > 0.0) || !(params.epsilon > 0.0)) {
    throw Error(ErrorKind::NonPositiveHyperparameter, "C, gamma and epsilon must be > 0");
  }
  ds.validate();
  if (ds.samples.empty()) throw Error(ErrorKind::EmptyTraining, "no training samples");
  if (!ds.has_all_distances()) {
    throw Error(ErrorKind::MissingDistance, "every sample needs a distance to train a regressor");
  }

  SvrModel model;
  model.scaler = fit_scaler(ds);
  model.kernel.gamma = params.gamma;
  model.C = params.C;
  model.epsilon = params.epsilon;

  const auto x = scale_all(ds, model.scaler);
  const std::size_t n = x.size();
  std::vector<int> y(2 * n);
  std::vector<double> p(2 * n);
  std::vector<double> upper(2 * n, params.C);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = *ds.samples[i].distance_cm;
    y[i] = +1;
    y[i + n] = -1;
    p[i] = params.epsilon - target;
    p[i + n] = params.epsilon + target;
  }

  const double gamma = params.gamma;
  RowCache kernel(n, [&](std::size_t i, std::size_t j) { return rbf(x[i], x[j], gamma); });
  // Q over the doubled index set, rows assembled from kernel rows.
  auto entry = [&](std::size_t s, std::size_t t) {
    const std::size_t a = s % n;
    const std::size_t b = t % n;
    const double k = a == b ? kernel.diag(a) : kernel.row(a)[b];
    return y[s] * y[t] * k;
  };
  RowCache q(2 * n, entry);
  options.tolerance = params.tolerance;
  if (params.max_iterations > 0) options.max_iterations = params.max_iterations;
  const SmoResult r = solve_smo(q, y, p, upper, options);

  for (std::size_t i = 0; i < n; ++i) {
    const double coef = r.alpha[i] - r.alpha[i + n];
    if (coef != 0.0) {
      model.support_vectors.push_back(x[i]);
      model.coefs.push_back(coef);
    }
  }
  model.bias = -r.rho;
  model.diagnostics = {r.alpha, r.dual_objective, r.kkt_violation, r.equality_residual, r.iterations};
  return model;
}

}  // namespace flownav
