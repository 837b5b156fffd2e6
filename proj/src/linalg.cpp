#include "meicmp/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>

namespace meicmp {

Mat kron_identity(const Mat& base, int d) {
  Mat out = Mat::Zero(base.rows() * d, base.cols() * d);
  for (Eigen::Index i = 0; i < base.rows(); ++i)
    for (Eigen::Index j = 0; j < base.cols(); ++j)
      if (base(i, j) != 0.0)
        out.block(i * d, j * d, d, d) = base(i, j) * Mat::Identity(d, d);
  return out;
}

namespace {

int numerical_rank(const Eigen::JacobiSVD<Mat>& svd, double rel_tol) {
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0;
  const double cut = rel_tol * std::max(1.0, s(0));
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

}  // namespace

Mat orthonormal_span(const Mat& cols, double rel_tol) {
  if (cols.cols() == 0 || cols.rows() == 0) return Mat(cols.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeFullU);
  const int r = numerical_rank(svd, rel_tol);
  return svd.matrixU().leftCols(r);
}

Mat null_space(const Mat& m, double rel_tol) {
  if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
  if (m.cols() == 0) return Mat(0, 0);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const int r = numerical_rank(svd, rel_tol);
  return svd.matrixV().rightCols(m.cols() - r);
}

Vec pinv_solve(const Mat& m, const Vec& rhs, double rel_tol) {
  if (m.cols() == 0) return Vec(0);
  if (m.rows() == 0) return Vec::Zero(m.cols());
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(m);
  cod.setThreshold(rel_tol);
  return cod.solve(rhs);
}

ConstrainedLs constrained_least_squares(const Mat& M, const Vec& r, const Mat& G, const Vec& h) {
  const Eigen::Index n = M.cols();
  ConstrainedLs out;
  Vec w0 = pinv_solve(M, r);
  Mat N = null_space(M);
  if (N.cols() > 0) {
    Vec z = pinv_solve(G * N, -(G * w0 + h));
    w0 += N * z;
  }
  out.w = w0;
  out.constraint_residual = n == 0 ? r.norm() : (M * w0 - r).norm();
  out.objective = (G * w0 + h).norm();
  return out;
}

bool is_symmetric(const Mat& s, double tol) {
  return s.rows() == s.cols() && (s - s.transpose()).norm() <= tol;
}

bool is_numerically_symmetric(const Mat& s) {
  return is_symmetric(s, 1e-8 * (1.0 + s.norm()));
}

double min_symmetric_eigenvalue(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_symmetric_eigenvalue(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_hurwitz(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, false);
  return (es.eigenvalues().real().array() < 0.0).all();
}

Vec stack(const std::vector<Vec>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.size();
  Vec out(total);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.segment(at, b.size()) = b;
    at += b.size();
  }
  return out;
}

}  // namespace meicmp
