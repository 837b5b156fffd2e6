#pragma once

#include "meicmp/linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace meicmp {

enum class OdeMethod { RK4, RK45 };

std::string to_string(OdeMethod m);

using OdeRhs = std::function<Vec(double, const Vec&)>;

struct OdeOptions {
  OdeMethod method = OdeMethod::RK45;
  /// Fixed step for RK4; initial step for RK45.
  double dt = 1e-3;
  /// Local error tolerance per step (absolute and relative) for RK45.
  double tol = 1e-8;
  /// Spacing of recorded samples; 0 records every accepted step.
  double record_every = 0.0;
  /// Upper bound on the adaptive step (0 = unbounded).
  double max_step = 0.0;
  long max_steps = 50'000'000;
};

struct OdeSolution {
  std::vector<double> t;
  std::vector<Vec> x;
  long steps = 0;
};

/// Integrates x' = f(t, x) from t0 over `duration` (Boost.Odeint). Steps are shortened to
/// land exactly on record times and on the end point.
OdeSolution integrate_ode(const OdeRhs& f, double t0, const Vec& x0, double duration, const OdeOptions& opts);

}  // namespace meicmp
