#include "meicmp/minimize.hpp"

#include "meicmp/error.hpp"

#include <cmath>

namespace meicmp {

namespace {

void record(MinimizeResult& r, const MinimizeOptions& opts, int it, double obj, double res) {
  if (opts.trace_every > 0 && it % opts.trace_every == 0) r.trace.push_back({it, obj, res});
}

}  // namespace

MinimizeResult newton_minimize(const ValueFn& f, const GradFn& grad, const HessFn& hess, Vec x0,
                               const MinimizeOptions& opts) {
  MinimizeResult r;
  r.method = "newton";
  Vec x = std::move(x0);
  double fx = f(x);
  require(std::isfinite(fx), ErrorCode::OutsideDomain, "Newton start point outside the domain");
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vec g = grad(x);
    const double gn = g.norm();
    record(r, opts, it, fx, gn);
    r.iterations = it;
    if (gn <= opts.tol) {
      r.converged = true;
      break;
    }
    Vec dir;
    Eigen::LDLT<Mat> ldlt(hess(x));
    bool newton = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (newton) {
      dir = -ldlt.solve(g);
      newton = dir.allFinite() && g.dot(dir) < 0.0;
    }
    if (!newton) dir = -g;
    double t = 1.0;
    double fn = f(x + t * dir);
    const double slope = g.dot(dir);
    int shrink = 0;
    while (!(std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) && shrink < 60) {
      t *= 0.5;
      fn = f(x + t * dir);
      ++shrink;
    }
    if (shrink == 60) {
      // No decrease possible at working precision.
      r.converged = gn <= std::sqrt(opts.tol);
      break;
    }
    x += t * dir;
    fx = fn;
  }
  r.x = x;
  r.objective = fx;
  r.residual = grad(x).norm();
  r.converged = r.converged || r.residual <= opts.tol;
  return r;
}

MinimizeResult proximal_gradient(const ValueFn& f, const GradFn& grad, const ValueFn& g, const ProxFn& prox,
                                 Vec x0, const MinimizeOptions& opts) {
  MinimizeResult r;
  r.method = opts.step > 0.0 ? "fista-fixed" : "fista-backtracking";
  auto gval = [&](const Vec& x) { return g ? g(x) : 0.0; };
  Vec x = prox(x0, 1.0);
  double fx = f(x);
  if (!std::isfinite(fx)) {
    x = std::move(x0);
    fx = f(x);
  }
  require(std::isfinite(fx), ErrorCode::Infeasible, "proximal gradient start point outside the domain");
  double F = fx + gval(x);
  Vec x_prev = x;
  double theta = 1.0;
  double t = opts.step > 0.0 ? opts.step : 1.0;
  double res = kInf;
  for (int it = 0; it < opts.max_iter; ++it) {
    r.iterations = it;
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    Vec yk = x + ((theta - 1.0) / theta_next) * (x - x_prev);
    double fy = f(yk);
    if (!std::isfinite(fy)) {
      yk = x;
      fy = fx;
    }
    const Vec gy = grad(yk);
    Vec xn;
    double fxn = 0.0;
    if (opts.step > 0.0) {
      xn = prox(yk - t * gy, t);
      fxn = f(xn);
    } else {
      // Backtracking on the quadratic upper model; t may also grow slowly.
      t *= 1.25;
      for (int bt = 0; bt < 80; ++bt) {
        xn = prox(yk - t * gy, t);
        fxn = f(xn);
        const Vec dx = xn - yk;
        if (std::isfinite(fxn) && fxn <= fy + gy.dot(dx) + dx.squaredNorm() / (2.0 * t) + 1e-14 * std::abs(fy)) break;
        t *= 0.5;
      }
    }
    res = (xn - yk).norm() / t;
    const double Fn = fxn + gval(xn);
    if (!std::isfinite(Fn)) fail(ErrorCode::NoConvergence, "proximal gradient left the effective domain");
    x_prev = x;
    if (Fn > F) {
      // Function-value restart.
      theta = 1.0;
      x_prev = x;
      if (Fn > F + 1e-12 * (1.0 + std::abs(F))) {
        record(r, opts, it, F, res);
        if (res <= opts.tol) {
          r.converged = true;
          break;
        }
        continue;
      }
    } else {
      theta = theta_next;
    }
    x = std::move(xn);
    fx = fxn;
    F = Fn;
    record(r, opts, it, F, res);
    if (res <= opts.tol) {
      r.converged = true;
      break;
    }
  }
  // Report the gradient mapping at the final iterate itself.
  const Vec gx = grad(x);
  const Vec xp = prox(x - t * gx, t);
  r.residual = std::min(res, (xp - x).norm() / t);
  r.converged = r.converged || r.residual <= opts.tol;
  r.x = x;
  r.objective = F;
  return r;
}

MinimizeResult subgradient_method(const ValueFn& f, const GradFn& subgrad, const std::function<Vec(const Vec&)>& project,
                                  Vec x0, double c, const MinimizeOptions& opts) {
  MinimizeResult r;
  r.method = "subgradient";
  Vec x = project(x0);
  double fx = f(x);
  require(std::isfinite(fx), ErrorCode::Infeasible, "subgradient start point outside the domain");
  Vec best = x;
  double fbest = fx;
  double best_res = kInf;
  for (int it = 0; it < opts.max_iter; ++it) {
    r.iterations = it;
    const Vec g = subgrad(x);
    // Projected subgradient: only the component along the feasible directions matters.
    const Vec pg = project(x - g) - x;
    const double gn = pg.norm();
    if (fx <= fbest) best_res = gn;
    record(r, opts, it, fbest, best_res);
    if (gn <= opts.tol) {
      best = x;
      fbest = fx;
      best_res = gn;
      r.converged = true;
      break;
    }
    const double step = c / std::sqrt(static_cast<double>(it) + 1.0);
    x = project(x + step * pg / gn);
    fx = f(x);
    if (std::isfinite(fx) && fx < fbest) {
      fbest = fx;
      best = x;
    }
  }
  r.x = best;
  r.objective = fbest;
  r.residual = best_res;
  return r;
}

}  // namespace meicmp
