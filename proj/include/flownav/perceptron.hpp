#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "flownav/rng.hpp"
#include "flownav/svm.hpp"

namespace flownav {

struct PerceptronParams {
  int max_epochs = 100;
  bool balanced = true;
  std::uint64_t seed = 42;
};

struct PerceptronModel {
  std::vector<double> weights;
  double bias = 0.0;
  int epochs_run = 0;
  std::size_t updates = 0;  // total corrections made during training
  Scaler scaler;

  std::size_t dimension() const noexcept { return weights.size(); }
};

inline double perceptron_activation(std::span<const double> w, double b, std::span<const double> x) {
  return std::inner_product(w.begin(), w.end(), x.begin(), b);
}

// w <- w + eta*y*x, b <- b + eta*y
inline void perceptron_update(std::span<double> w, double& b, std::span<const double> x, int y, double eta) {
  for (std::size_t d = 0; d < w.size(); ++d) w[d] += eta * y * x[d];
  b += eta * y;
}

inline Prediction predict_perceptron(const PerceptronModel& model, std::span<const double> x) {
  const auto scaled = model.scaler.apply(x);
  const double f = perceptron_activation(model.weights, model.bias, scaled);
  return {f > 0.0 ? +1 : -1, f};
}

// Online perceptron with per-class learning rates n / (2 n_y). Stops early
// after an epoch without corrections.
inline PerceptronModel train_perceptron(const Dataset& ds, const PerceptronParams& params = {}) {
  if (params.max_epochs < 1 || params.max_epochs > 100) {
    throw Error(ErrorKind::InvalidArgument, "max_epochs must lie in [1, 100]");
  }
  ds.validate();
  require_both_classes(ds);

  PerceptronModel model;
  model.scaler = fit_scaler(ds);
  const auto x = scale_all(ds, model.scaler);
  const ClassWeights rates = balanced_class_weights(ds, params.balanced);
  model.weights.assign(ds.dimension(), 0.0);

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(params.seed);
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t corrections = 0;
    for (std::size_t idx : order) {
      const int y = ds.samples[idx].label;
      if (y * perceptron_activation(model.weights, model.bias, x[idx]) <= 0.0) {
        perceptron_update(model.weights, model.bias, x[idx], y, rates.of(y));
        ++corrections;
      }
    }
    model.epochs_run = epoch + 1;
    model.updates += corrections;
    if (corrections == 0) break;
  }
  return model;
}

}  // namespace flownav
