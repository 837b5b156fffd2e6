#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

namespace meicmp {

/// Nondecreasing scalar map used coordinatewise by separable integral
/// functions and by the nonlinear edge controllers.
class ScalarMap {
 public:
  enum class Kind { Linear, Cubic, PaperPsi, Inverse, Custom };

  /// s -> slope * s
  static ScalarMap linear(double slope);
  /// s -> a * s + b * s^3
  static ScalarMap cubic(double a, double b);
  static ScalarMap paper_psi();
  /// User map; `smooth` declares continuity (false routes optimizers to subgradient steps).
  static ScalarMap custom(std::string name, std::function<double(double)> fn, bool smooth,
                          bool strictly_increasing);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  double operator()(double s) const;
  double derivative(double s) const;

  /// Generalized inverse; +/-inf outside the open range of an increasing map.
  double inverse_value(double y) const;
  ScalarMap inverse() const;

  /// Open interval containing the values of the map.
  std::pair<double, double> range() const;

  bool strictly_increasing() const { return strictly_increasing_; }
  bool smooth() const { return smooth_; }
  /// Linear map with zero slope.
  bool is_zero() const { return kind_ == Kind::Linear && a_ == 0.0; }

  /// Integral from lo to hi: closed form for polynomial kinds, adaptive
  /// Gauss-Kronrod quadrature (relative tolerance 1e-12) otherwise. +inf when the
  /// integrand is infinite inside the interval.
  double integral(double lo, double hi) const;

  double coefficient_a() const { return a_; }
  double coefficient_b() const { return b_; }
  const ScalarMap& inner() const { return *inner_; }

 private:
  ScalarMap() = default;
  Kind kind_ = Kind::Linear;
  std::string name_;
  double a_ = 0.0;
  double b_ = 0.0;
  bool smooth_ = true;
  bool strictly_increasing_ = true;
  std::shared_ptr<const ScalarMap> inner_;
  std::function<double(double)> fn_;
};

}  // namespace meicmp
