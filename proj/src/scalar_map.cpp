#include "meicmp/scalar_map.hpp"

#include "meicmp/couplers.hpp"
#include "meicmp/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace meicmp {

namespace {

constexpr double kInfD = std::numeric_limits<double>::infinity();

// Gauss-Kronrod on [a, b], split at 0 where the built-in maps may lose smoothness.
double quadrature(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  constexpr unsigned max_depth = 12;
  constexpr double tol = 1e-12;
  if (a < 0.0 && b > 0.0) return GK::integrate(f, a, 0.0, max_depth, tol) + GK::integrate(f, 0.0, b, max_depth, tol);
  if (b < 0.0 && a > 0.0) return GK::integrate(f, a, 0.0, max_depth, tol) + GK::integrate(f, 0.0, b, max_depth, tol);
  return GK::integrate(f, a, b, max_depth, tol);
}

}  // namespace

ScalarMap ScalarMap::linear(double slope) {
  require(slope >= 0.0, ErrorCode::UnsupportedKind, "linear scalar map must be nondecreasing");
  ScalarMap m;
  m.kind_ = Kind::Linear;
  m.name_ = "linear";
  m.a_ = slope;
  m.strictly_increasing_ = slope > 0.0;
  return m;
}

ScalarMap ScalarMap::cubic(double a, double b) {
  require(a >= 0.0 && b >= 0.0, ErrorCode::UnsupportedKind, "cubic scalar map needs nonnegative coefficients");
  ScalarMap m;
  m.kind_ = Kind::Cubic;
  m.name_ = "cubic";
  m.a_ = a;
  m.b_ = b;
  m.strictly_increasing_ = a > 0.0 || b > 0.0;
  return m;
}

ScalarMap ScalarMap::paper_psi() {
  ScalarMap m;
  m.kind_ = Kind::PaperPsi;
  m.name_ = "paper_psi";
  return m;
}

ScalarMap ScalarMap::custom(std::string name, std::function<double(double)> fn, bool smooth,
                            bool strictly_increasing) {
  ScalarMap m;
  m.kind_ = Kind::Custom;
  m.name_ = std::move(name);
  m.fn_ = std::move(fn);
  m.smooth_ = smooth;
  m.strictly_increasing_ = strictly_increasing;
  return m;
}

double ScalarMap::operator()(double s) const {
  switch (kind_) {
    case Kind::Linear: return a_ * s;
    case Kind::Cubic: return a_ * s + b_ * s * s * s;
    case Kind::PaperPsi: return meicmp::paper_psi(s);
    case Kind::Inverse: return inner_->inverse_value(s);
    case Kind::Custom: return fn_(s);
  }
  return 0.0;
}

double ScalarMap::derivative(double s) const {
  switch (kind_) {
    case Kind::Linear: return a_;
    case Kind::Cubic: return a_ + 3.0 * b_ * s * s;
    case Kind::Inverse: {
      const double x = inner_->inverse_value(s);
      if (!std::isfinite(x)) return kInfD;
      const double g = inner_->derivative(x);
      return g > 0.0 ? 1.0 / g : kInfD;
    }
    default: {
      const double h = 1e-5 * std::max(1.0, std::abs(s));
      return ((*this)(s + h) - (*this)(s - h)) / (2.0 * h);
    }
  }
}

std::pair<double, double> ScalarMap::range() const {
  switch (kind_) {
    case Kind::Linear:
      return a_ > 0.0 ? std::pair{-kInfD, kInfD} : std::pair{0.0, 0.0};
    case Kind::Cubic:
      return strictly_increasing_ ? std::pair{-kInfD, kInfD} : std::pair{0.0, 0.0};
    case Kind::PaperPsi: {
      const double l2 = std::log(2.0) * std::log(2.0);
      return {std::asin(-l2 / (l2 + 1.0)), std::numbers::pi / 2.0};
    }
    case Kind::Inverse: return {-kInfD, kInfD};
    case Kind::Custom: return {fn_(-1e12), fn_(1e12)};
  }
  return {-kInfD, kInfD};
}

double ScalarMap::inverse_value(double y) const {
  if (kind_ == Kind::Linear) {
    if (a_ > 0.0) return y / a_;
    return y == 0.0 ? 0.0 : (y > 0.0 ? kInfD : -kInfD);
  }
  if (kind_ == Kind::Inverse) return (*inner_)(y);
  const auto [lo_v, hi_v] = range();
  if (!(y > lo_v)) return -kInfD;
  if (!(y < hi_v)) return kInfD;
  // Bracket, then bisect.
  double lo = -1.0;
  double hi = 1.0;
  while ((*this)(lo) > y) {
    lo *= 2.0;
    if (lo < -1e300) return -kInfD;
  }
  while ((*this)(hi) < y) {
    hi *= 2.0;
    if (hi > 1e300) return kInfD;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((*this)(mid) < y)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

ScalarMap ScalarMap::inverse() const {
  if (kind_ == Kind::Inverse) return *inner_;
  if (kind_ == Kind::Linear && a_ > 0.0) return linear(1.0 / a_);
  require(strictly_increasing_, ErrorCode::UnsupportedKind, "inverse of a map that is not strictly increasing");
  ScalarMap m;
  m.kind_ = Kind::Inverse;
  m.name_ = "inverse(" + name_ + ")";
  m.inner_ = std::make_shared<const ScalarMap>(*this);
  m.smooth_ = smooth_;
  return m;
}

double ScalarMap::integral(double lo, double hi) const {
  switch (kind_) {
    case Kind::Linear: return 0.5 * a_ * (hi * hi - lo * lo);
    case Kind::Cubic: return 0.5 * a_ * (hi * hi - lo * lo) + 0.25 * b_ * (hi * hi * hi * hi - lo * lo * lo * lo);
    case Kind::Inverse: {
      const auto [rlo, rhi] = inner_->range();
      if (!(lo > rlo && lo < rhi && hi > rlo && hi < rhi)) return kInfD;
      break;
    }
    default: break;
  }
  return quadrature([this](double s) { return (*this)(s); }, lo, hi);
}

}  // namespace meicmp
