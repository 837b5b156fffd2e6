#pragma once

#include "meicmp/integral_function.hpp"
#include "meicmp/linalg.hpp"
#include "meicmp/sets.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace meicmp {

/// A convex function and its conjugate, kept together so that neither has
/// to be recomputed.
struct IntegralPair {
  IntegralFunction K;
  IntegralFunction Kstar;
};

/// Steady-state input-output relation on R^d (or a stack of them).
///
///   Affine            y = S u + v
///   GradientOfConvex  y in dK(u), with u in dK*(y) for the inverse
///   Integrator        {0} x R^d
///   Stacked           blockwise product of children
///   Shifted           y in inner(u - alpha) + beta
///   Map               black-box single-valued forward/inverse callbacks
class VectorRelation {
 public:
  enum class Kind { Affine, GradientOfConvex, Integrator, Stacked, Shifted, Map };

  using PointFn = std::function<Vec(const Vec&)>;

  static VectorRelation affine(Mat S, Vec v);
  /// y in dchi(u).
  static VectorRelation gradient_of(const IntegralFunction& chi);
  /// u in dchi(y), i.e. the relation is (dchi)^{-1}.
  static VectorRelation inverse_gradient_of(const IntegralFunction& chi);
  static VectorRelation integrator(int dim);
  static VectorRelation stacked(std::vector<VectorRelation> children);
  static VectorRelation shifted(VectorRelation inner, Vec alpha, Vec beta);
  /// Either callback may be empty when that direction is not evaluable.
  static VectorRelation map(int dim, std::string name, PointFn forward, PointFn inverse);

  Kind kind() const;
  int dim() const;
  std::string describe() const;

  /// k(u); Empty when u is not a steady-state input.
  SetDescriptor forward(const Vec& u) const;
  /// k^{-1}(y); Empty when y is not a steady-state output.
  SetDescriptor inverse(const Vec& y) const;

  /// Integral function K with dK = k and its conjugate. Throws
  /// UnsupportedKind when the relation is not known to be CM in closed form.
  IntegralPair integrals() const;
  bool has_integrals() const;

  const Mat& S() const;
  const Vec& v() const;
  const std::vector<VectorRelation>& children() const;
  const VectorRelation& inner() const;
  const Vec& alpha() const;
  const Vec& beta() const;

 private:
  struct Node;
  explicit VectorRelation(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

using CyclePairs = std::vector<std::pair<Vec, Vec>>;

/// sum_i y_i^T (u_i - u_{i-1}) with u_0 = u_N.
double cyclic_sum(const CyclePairs& pairs);

struct CmSampler {
  /// Inputs are drawn as center + scale * N(0, I); empty center means 0.
  Vec center;
  double scale = 1.0;
  std::uint64_t seed = 0;
};

struct CmReport {
  bool pass = true;
  int cycles_tested = 0;
  double worst_sum = 0.0;
  /// Witness cycle with cyclic sum < -tol, present iff !pass.
  std::optional<CyclePairs> counterexample;
  /// Recorded rule used to pick outputs from set-valued evaluations.
  std::string selection_rule;
};

/// Randomized cyclic-monotonicity falsifier. Half of the cycles use
/// independent Gaussian inputs, the other half use inputs placed on a
/// regular polygon in a random plane, which exposes rotational
/// (skew-symmetric) behaviour that random cycles rarely hit.
CmReport check_cm(const VectorRelation& rel, const CmSampler& sampler, int cycles, int max_cycle_len, double tol);

}  // namespace meicmp
