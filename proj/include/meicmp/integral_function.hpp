#pragma once

#include "meicmp/linalg.hpp"
#include "meicmp/scalar_map.hpp"
#include "meicmp/sets.hpp"

#include <memory>
#include <string>
#include <vector>

namespace meicmp {

struct ConjugateOptions {
  int max_iter = 500;
  double tol = 1e-12;
  /// Iterates beyond this norm are reported as an unbounded inner problem.
  double bound = 1e8;
};

struct ConjugateValue {
  double value = 0.0;
  bool closed_form = false;
  Vec argmax;  // maximizer u of y^T u - f(u) when computed numerically
};

/// Extended-real-valued closed convex function on R^dim. Immutable; copies
/// share the expression tree.
///
///   Quadratic        1/2 x^T P x + q^T x + c
///   IndicatorZero    0 on the kernel {x : N^T x = 0}, +inf elsewhere (N = I: the origin)
///   ScalarSeparable  sum_j int_{lower_j}^{x_j} phi_j(s) ds + constant
///   Sum              sum of same-dimension terms
///   Shifted          inner(x - offset) + linear^T x + constant
///   BlockStack       sum_k f_k(x_k) over consecutive blocks
///   Conjugate        sup_u { x^T u - inner(u) }, evaluated numerically
class IntegralFunction {
 public:
  enum class Kind { Quadratic, IndicatorZero, ScalarSeparable, Sum, Shifted, BlockStack, Conjugate };

  static IntegralFunction quadratic(Mat P, Vec q, double c = 0.0);
  static IntegralFunction zero(int dim);
  static IntegralFunction indicator_zero(int dim);
  /// Indicator of {x : constraints^T x = 0}; the columns need not be orthonormal.
  static IntegralFunction indicator_kernel(const Mat& constraints);
  static IntegralFunction separable(std::vector<ScalarMap> maps, Vec lower = Vec(), double constant = 0.0);
  static IntegralFunction separable(const ScalarMap& map, int dim);
  static IntegralFunction sum(std::vector<IntegralFunction> terms);
  static IntegralFunction shifted(IntegralFunction inner, Vec offset, Vec linear, double constant = 0.0);
  static IntegralFunction block_stack(std::vector<IntegralFunction> blocks);
  static IntegralFunction numeric_conjugate(IntegralFunction inner);

  Kind kind() const;
  int dim() const;
  std::string describe() const;

  double value(const Vec& x) const;
  /// Differentiable on the interior of its effective domain.
  bool is_smooth() const;
  /// Quadratic after flattening sums and shifts; fills the equivalent form.
  bool as_quadratic(Mat* P = nullptr, Vec* q = nullptr, double* c = nullptr) const;
  /// True when no numeric Conjugate node appears anywhere in the tree.
  bool closed_form() const;

  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  SetDescriptor subgradient(const Vec& x) const;
  Vec prox(const Vec& x, double step) const;

  /// Conjugate with closed forms where available, otherwise a Conjugate node.
  IntegralFunction conjugate() const;
  ConjugateValue conjugate_value(const Vec& y, const ConjugateOptions& opts = {}) const;
  ConjugateValue numeric_conjugate_value(const Vec& y, const ConjugateOptions& opts = {}) const;

  // Kind-specific accessors.
  const Mat& P() const;
  const Vec& q() const;
  double c() const;
  const std::vector<ScalarMap>& maps() const;
  const Vec& lower() const;
  const std::vector<IntegralFunction>& children() const;
  const IntegralFunction& inner() const;
  const Vec& offset() const;
  const Vec& linear() const;
  double constant() const;

 private:
  struct Node;
  explicit IntegralFunction(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Fenchel-Young residual |f(x) + f*(g) - g^T x|, zero iff g is a subgradient of f at x.
double fenchel_young_residual(const IntegralFunction& f, const IntegralFunction& fstar, const Vec& x, const Vec& g);

}  // namespace meicmp
