#include "meicmp/sets.hpp"

#include "meicmp/error.hpp"

#include <sstream>

namespace meicmp {

SetDescriptor::SetDescriptor(Kind kind, int dim, Vec base, Mat basis)
    : kind_(kind), dim_(dim), base_(std::move(base)), basis_(std::move(basis)) {}

SetDescriptor SetDescriptor::empty(int dim) { return SetDescriptor(Kind::Empty, dim, Vec(), Mat(dim, 0)); }

SetDescriptor SetDescriptor::point(Vec p) {
  const int dim = static_cast<int>(p.size());
  return SetDescriptor(Kind::Point, dim, std::move(p), Mat(dim, 0));
}

SetDescriptor SetDescriptor::everything(int dim) {
  return SetDescriptor(Kind::Everything, dim, Vec::Zero(dim), Mat::Identity(dim, dim));
}

SetDescriptor SetDescriptor::affine(const Vec& basepoint, const Mat& directions) {
  const int dim = static_cast<int>(basepoint.size());
  require(directions.rows() == dim || directions.cols() == 0, ErrorCode::DimensionMismatch,
          "subspace directions have wrong length");
  Mat q = directions.cols() == 0 ? Mat(dim, 0) : orthonormal_span(directions);
  if (q.cols() == 0) return point(basepoint);
  if (q.cols() == dim) return everything(dim);
  Vec base = basepoint - q * (q.transpose() * basepoint);
  return SetDescriptor(Kind::AffineSubspace, dim, std::move(base), std::move(q));
}

const Vec& SetDescriptor::basepoint() const {
  require(kind_ != Kind::Empty, ErrorCode::EmptySelection, "empty set has no elements");
  return base_;
}

Vec SetDescriptor::project(const Vec& x) const {
  require(kind_ != Kind::Empty, ErrorCode::EmptySelection, "cannot project onto the empty set");
  require(x.size() == dim_, ErrorCode::DimensionMismatch, "projection argument has wrong length");
  switch (kind_) {
    case Kind::Point: return base_;
    case Kind::Everything: return x;
    default: return base_ + basis_ * (basis_.transpose() * (x - base_));
  }
}

double SetDescriptor::distance(const Vec& x) const {
  if (kind_ == Kind::Empty) return kInf;
  return (x - project(x)).norm();
}

SetDescriptor SetDescriptor::translate(const Vec& offset) const {
  require(offset.size() == dim_, ErrorCode::DimensionMismatch, "translation has wrong length");
  switch (kind_) {
    case Kind::Empty:
    case Kind::Everything: return *this;
    case Kind::Point: return point(base_ + offset);
    default: return affine(base_ + offset, basis_);
  }
}

SetDescriptor SetDescriptor::linear_image(const Mat& m) const {
  require(m.cols() == dim_, ErrorCode::DimensionMismatch, "linear map has wrong width");
  const int out = static_cast<int>(m.rows());
  if (kind_ == Kind::Empty) return empty(out);
  if (kind_ == Kind::Point) return point(m * base_);
  return affine(m * base_, m * basis_);
}

Vec SetDescriptor::sample(std::mt19937_64& rng, double scale) const {
  require(kind_ != Kind::Empty, ErrorCode::EmptySelection, "cannot sample the empty set");
  std::normal_distribution<double> g(0.0, scale);
  Vec coeff(basis_.cols());
  for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff(i) = g(rng);
  return base_ + basis_ * coeff;
}

std::string SetDescriptor::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Empty: os << "Empty"; break;
    case Kind::Everything: os << "Everything(" << dim_ << ")"; break;
    case Kind::Point: os << "Point(" << base_.transpose() << ")"; break;
    case Kind::AffineSubspace:
      os << "AffineSubspace(base=" << base_.transpose() << ", dims=" << basis_.cols() << ")";
      break;
  }
  return os.str();
}

SetDescriptor minkowski_sum(const SetDescriptor& a, const SetDescriptor& b) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch, "Minkowski sum of sets of different dimension");
  if (a.is_empty() || b.is_empty()) return SetDescriptor::empty(a.dim());
  Mat dirs(a.dim(), a.basis().cols() + b.basis().cols());
  dirs << a.basis(), b.basis();
  return SetDescriptor::affine(a.basepoint() + b.basepoint(), dirs);
}

SetDescriptor cartesian(const std::vector<SetDescriptor>& blocks) {
  int dim = 0;
  int dirs = 0;
  bool any_empty = false;
  for (const auto& b : blocks) {
    dim += b.dim();
    dirs += static_cast<int>(b.basis().cols());
    any_empty = any_empty || b.is_empty();
  }
  if (any_empty) return SetDescriptor::empty(dim);
  Vec base(dim);
  Mat basis = Mat::Zero(dim, dirs);
  int row = 0;
  int col = 0;
  for (const auto& b : blocks) {
    base.segment(row, b.dim()) = b.basepoint();
    basis.block(row, col, b.dim(), b.basis().cols()) = b.basis();
    row += b.dim();
    col += static_cast<int>(b.basis().cols());
  }
  return SetDescriptor::affine(base, basis);
}

}  // namespace meicmp
