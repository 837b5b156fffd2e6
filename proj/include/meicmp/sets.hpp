#pragma once

#include "meicmp/linalg.hpp"

#include <random>
#include <string>
#include <vector>

namespace meicmp {

/// Closed family of sets produced by set-valued evaluations: the empty set,
/// a point, an affine subspace (basepoint + orthonormal directions) or the
/// whole space. The basepoint of a subspace is kept orthogonal to its
/// directions, so it is also the minimum-norm element.
class SetDescriptor {
 public:
  enum class Kind { Empty, Point, AffineSubspace, Everything };

  static SetDescriptor empty(int dim);
  static SetDescriptor point(Vec p);
  static SetDescriptor affine(const Vec& basepoint, const Mat& directions);
  static SetDescriptor everything(int dim);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_empty() const { return kind_ == Kind::Empty; }
  bool is_point() const { return kind_ == Kind::Point; }

  /// Minimum-norm element (the basepoint). Invalid for Empty.
  const Vec& basepoint() const;
  /// Orthonormal basis of the direction space (dim x k).
  const Mat& basis() const { return basis_; }

  Vec project(const Vec& x) const;
  double distance(const Vec& x) const;
  bool contains(const Vec& x, double tol) const { return distance(x) <= tol; }

  SetDescriptor translate(const Vec& offset) const;
  /// { M s : s in this }
  SetDescriptor linear_image(const Mat& m) const;

  /// Selection rule for sampling an element: basepoint plus a Gaussian
  /// combination of the directions with standard deviation `scale`.
  Vec sample(std::mt19937_64& rng, double scale) const;

  std::string describe() const;

 private:
  SetDescriptor(Kind kind, int dim, Vec base, Mat basis);
  Kind kind_;
  int dim_;
  Vec base_;
  Mat basis_;
};

SetDescriptor minkowski_sum(const SetDescriptor& a, const SetDescriptor& b);

/// Cartesian product of the blocks, in order.
SetDescriptor cartesian(const std::vector<SetDescriptor>& blocks);

}  // namespace meicmp
