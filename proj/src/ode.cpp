#include "meicmp/ode.hpp"

#include "meicmp/error.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace odeint = boost::numeric::odeint;

namespace meicmp {

std::string to_string(OdeMethod m) { return m == OdeMethod::RK4 ? "rk4" : "rk45"; }

namespace {

using State = std::vector<double>;

Eigen::Map<const Vec> view(const State& s) { return {s.data(), static_cast<Eigen::Index>(s.size())}; }

std::vector<double> record_times(double t0, double t_end, double every) {
  std::vector<double> times{t0};
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
  for (long k = 1;; ++k) {
    const double t = t0 + every * static_cast<double>(k);
    if (t >= t_end - eps) break;
    times.push_back(t);
  }
  times.push_back(t_end);
  return times;
}

}  // namespace

OdeSolution integrate_ode(const OdeRhs& f, double t0, const Vec& x0, double duration, const OdeOptions& opts) {
  require(duration > 0.0, ErrorCode::Usage, "integration horizon must be positive");
  require(opts.dt > 0.0, ErrorCode::Usage, "step size must be positive");
  if (!x0.allFinite()) fail(ErrorCode::NonFiniteState, "initial state is not finite");

  const double t_end = t0 + duration;
  OdeSolution sol;

  auto system = [&](const State& x, State& dxdt, double t) {
    const Vec d = f(t, view(x));
    if (!d.allFinite()) fail(ErrorCode::NonFiniteState, "vector field became non-finite at t = " + std::to_string(t));
    dxdt.assign(d.data(), d.data() + d.size());
  };
  auto observer = [&](const State& x, double t) {
    if (!sol.t.empty() && t <= sol.t.back()) return;
    Vec v = view(x);
    if (!v.allFinite()) fail(ErrorCode::NonFiniteState, "state became non-finite at t = " + std::to_string(t));
    sol.t.push_back(t);
    sol.x.push_back(std::move(v));
  };

  State x(x0.data(), x0.data() + x0.size());
  // The step checker bounds the work between two observations.
  const int checker_steps =
      static_cast<int>(std::min<long>(opts.max_steps, std::numeric_limits<int>::max()));
  try {
    if (opts.method == OdeMethod::RK4) {
      odeint::runge_kutta4<State> stepper;
      if (opts.record_every > 0.0) {
        const auto times = record_times(t0, t_end, opts.record_every);
        sol.steps = static_cast<long>(odeint::integrate_times(stepper, system, x, times.begin(), times.end(), opts.dt,
                                                              observer, odeint::max_step_checker(checker_steps)));
      } else {
        // Step exactly onto the end point.
        const long n = std::max(1L, static_cast<long>(std::ceil(duration / opts.dt - 1e-9)));
        const double h = duration / static_cast<double>(n);
        sol.steps = static_cast<long>(odeint::integrate_n_steps(stepper, system, x, t0, h, static_cast<size_t>(n), observer));
      }
    } else {
      using Dopri = odeint::runge_kutta_dopri5<State>;
      const double max_dt = opts.max_step > 0.0 ? opts.max_step : duration;
      auto stepper = odeint::make_controlled(opts.tol, opts.tol, max_dt, Dopri());
      if (opts.record_every > 0.0) {
        const auto times = record_times(t0, t_end, opts.record_every);
        sol.steps = static_cast<long>(odeint::integrate_times(stepper, system, x, times.begin(), times.end(), opts.dt,
                                                              observer, odeint::max_step_checker(checker_steps)));
      } else {
        sol.steps = static_cast<long>(odeint::integrate_adaptive(stepper, system, x, t0, t_end, opts.dt, observer));
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const odeint::step_adjustment_error& e) {
    fail(ErrorCode::StepUnderflow, std::string("adaptive step could not be reduced further: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    fail(ErrorCode::StepUnderflow, std::string("step budget exhausted: ") + e.what());
  } catch (const std::runtime_error& e) {
    fail(ErrorCode::StepUnderflow, std::string("integrator failure: ") + e.what());
  }
  if (sol.t.empty() || sol.t.back() < t_end - 1e-9 * std::max(1.0, std::abs(t_end))) observer(x, t_end);
  return sol;
}

}  // namespace meicmp
