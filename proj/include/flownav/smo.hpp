#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "flownav/error.hpp"

namespace flownav {

// Sequential minimal optimization for the box- and equality-constrained QP
//
//   min_a  1/2 a'Qa + p'a   s.t.  y'a = 0,  0 <= a_i <= upper_i,  y_i in {-1,+1}
//
// with Q_ij = y_i y_j K_ij. Each iteration picks the maximal violating pair and
// solves the two-variable subproblem in closed form. C-SVC and epsilon-SVR
// both reduce to this form.

struct SmoOptions {
  double tolerance = 1e-3;  // stop when max KKT violation (m - M) drops below this
  std::size_t max_iterations = 0;  // 0 -> max(10^7, 100 n)
  std::vector<double>* objective_trace = nullptr;  // dual objective after every step
};

struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;  // decision function offset: f(x) = sum(...) - rho
  double dual_objective = 0.0;  // -(1/2 a'Qa + p'a), maximization form
  double kkt_violation = 0.0;  // m - M at termination
  double equality_residual = 0.0;  // |y'a|
  std::size_t iterations = 0;
};

namespace detail {

inline constexpr double kTau = 1e-12;

inline bool in_up(int y, double a, double upper) { return (y > 0 && a < upper) || (y < 0 && a > 0.0); }
inline bool in_low(int y, double a, double upper) { return (y > 0 && a > 0.0) || (y < 0 && a < upper); }

// Maximal violation m - M for a given gradient; -inf/+inf sets collapse to 0.
inline double kkt_gap(std::span<const int> y, std::span<const double> alpha, std::span<const double> upper,
                      std::span<const double> grad, std::size_t* out_i = nullptr,
                      std::size_t* out_j = nullptr) {
  double m = -std::numeric_limits<double>::infinity();
  double big_m = std::numeric_limits<double>::infinity();
  std::size_t i_best = 0;
  std::size_t j_best = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double v = -y[t] * grad[t];
    if (in_up(y[t], alpha[t], upper[t]) && v > m) {
      m = v;
      i_best = t;
    }
    if (in_low(y[t], alpha[t], upper[t]) && v < big_m) {
      big_m = v;
      j_best = t;
    }
  }
  if (out_i) *out_i = i_best;
  if (out_j) *out_j = j_best;
  if (!std::isfinite(m) || !std::isfinite(big_m)) return 0.0;
  return m - big_m;
}

}  // namespace detail

// Rho from the final gradient: mean of y_i G_i over free variables, or the
// midpoint of the feasible interval when every variable sits on a bound.
inline double smo_rho(std::span<const int> y, std::span<const double> alpha, std::span<const double> upper,
                      std::span<const double> grad) {
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= upper[t]) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  if (n_free > 0) return sum_free / static_cast<double>(n_free);
  if (!std::isfinite(ub)) return lb;
  if (!std::isfinite(lb)) return ub;
  return 0.5 * (ub + lb);
}

// Q must provide size(), diag(i) and row(i) -> span of Q_i. Note that row()
// may invalidate earlier spans only if Q reallocates; RowCache does not.
template <typename QMatrix>
SmoResult solve_smo(QMatrix& q, std::span<const int> y, std::span<const double> p,
                    std::span<const double> upper, const SmoOptions& options = {}) {
  const std::size_t n = q.size();
  if (y.size() != n || p.size() != n || upper.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "SMO problem arrays differ in length");
  }
  const std::size_t max_iter =
      options.max_iterations > 0 ? options.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(p.begin(), p.end());
  double objective = 0.0;  // 1/2 a'Qa + p'a, tracked incrementally

  std::size_t iter = 0;
  double gap = 0.0;
  while (true) {
    std::size_t i = 0;
    std::size_t j = 0;
    gap = detail::kkt_gap(y, alpha, upper, grad, &i, &j);
    if (gap < options.tolerance) break;
    if (iter >= max_iter) {
      throw Error(ErrorKind::NonConvergence,
                  "SMO hit the iteration limit with KKT violation " + std::to_string(gap));
    }
    ++iter;

    const auto qi = q.row(i);
    const auto qj = q.row(j);
    const double ci = upper[i];
    const double cj = upper[j];
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = q.diag(i) + q.diag(j) + 2.0 * qi[j];
      if (quad <= 0.0) quad = detail::kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > ci - cj) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = ci - diff;
        }
      } else if (alpha[j] > cj) {
        alpha[j] = cj;
        alpha[i] = cj + diff;
      }
    } else {
      double quad = q.diag(i) + q.diag(j) - 2.0 * qi[j];
      if (quad <= 0.0) quad = detail::kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > ci) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = sum - ci;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > cj) {
        if (alpha[j] > cj) {
          alpha[j] = cj;
          alpha[i] = sum - cj;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    // Rounding in the clipping arithmetic can leave a value one ulp inside a
    // bound, which would misclassify it as free.
    for (std::size_t t : {i, j}) {
      const double slack = 1e-12 * upper[t];
      if (alpha[t] > upper[t] - slack) alpha[t] = upper[t];
      else if (alpha[t] < slack) alpha[t] = 0.0;
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    // f(a + d) - f(a) = g'd + 1/2 d'Qd restricted to the pair.
    objective += grad[i] * dai + grad[j] * daj +
                 0.5 * (q.diag(i) * dai * dai + q.diag(j) * daj * daj + 2.0 * qi[j] * dai * daj);
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * dai + qj[t] * daj;
    if (options.objective_trace) options.objective_trace->push_back(-objective);
  }

  SmoResult r;
  r.iterations = iter;
  r.kkt_violation = gap;
  r.rho = smo_rho(y, alpha, upper, grad);
  // Recompute the objective from the gradient to avoid drift: f = 1/2 sum a_i (G_i + p_i).
  double f = 0.0;
  double eq = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    f += 0.5 * alpha[t] * (grad[t] + p[t]);
    eq += y[t] * alpha[t];
  }
  r.dual_objective = -f;
  r.equality_residual = std::abs(eq);
  r.alpha = std::move(alpha);
  return r;
}

}  // namespace flownav
