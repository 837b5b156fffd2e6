#pragma once

#include "meicmp/linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace meicmp {

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  double residual = 0.0;
};

struct MinimizeOptions {
  int max_iter = 20000;
  double tol = 1e-10;
  /// Fixed step; 0 selects backtracking.
  double step = 0.0;
  /// Record every k-th iterate in the trace (0 disables).
  int trace_every = 1;
};

struct MinimizeResult {
  Vec x;
  double objective = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string method;
  std::vector<TraceRow> trace;
};

using ValueFn = std::function<double(const Vec&)>;
using GradFn = std::function<Vec(const Vec&)>;
using HessFn = std::function<Mat(const Vec&)>;
/// prox(x, t) = argmin_z g(z) + |z - x|^2 / (2 t)
using ProxFn = std::function<Vec(const Vec&, double)>;

/// Damped Newton with Armijo backtracking; falls back to a gradient step
/// when the Hessian is not positive definite. Residual is the gradient norm.
MinimizeResult newton_minimize(const ValueFn& f, const GradFn& grad, const HessFn& hess, Vec x0,
                               const MinimizeOptions& opts);

/// Accelerated proximal gradient (FISTA with function-value restart) for
/// f(x) + g(x), f smooth. Residual is the gradient-mapping norm
/// |x - prox(x - t grad f(x), t)| / t. `g` may be null when g is an
/// indicator handled entirely by `prox`.
MinimizeResult proximal_gradient(const ValueFn& f, const GradFn& grad, const ValueFn& g, const ProxFn& prox,
                                 Vec x0, const MinimizeOptions& opts);

/// Projected subgradient method with steps c / sqrt(t+1); keeps the best
/// iterate. Residual is the norm of the projected subgradient at the best point.
MinimizeResult subgradient_method(const ValueFn& f, const GradFn& subgrad, const std::function<Vec(const Vec&)>& project,
                                  Vec x0, double c, const MinimizeOptions& opts);

}  // namespace meicmp
