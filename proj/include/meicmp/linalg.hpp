#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace meicmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Kronecker product with the d x d identity.
Mat kron_identity(const Mat& base, int d);

/// Orthonormal basis of the column span of `cols` (columns may be dependent).
Mat orthonormal_span(const Mat& cols, double rel_tol = 1e-10);

/// Orthonormal basis of the null space of `m`.
Mat null_space(const Mat& m, double rel_tol = 1e-10);

/// Minimum-norm least-squares solution of m * x = rhs.
Vec pinv_solve(const Mat& m, const Vec& rhs, double rel_tol = 1e-12);

struct ConstrainedLs {
  Vec w;
  double constraint_residual = 0.0;  // ||M w - r||
  double objective = 0.0;            // ||G w + h||
};

/// Among the least-squares solutions of M w = r, pick the one minimizing
/// ||G w + h||, and among those the minimum-norm w.
ConstrainedLs constrained_least_squares(const Mat& M, const Vec& r, const Mat& G, const Vec& h);

bool is_symmetric(const Mat& s, double tol);

/// Symmetry test used for PSD classification: ||S - S^T||_F <= 1e-8 (1 + ||S||_F).
bool is_numerically_symmetric(const Mat& s);

double min_symmetric_eigenvalue(const Mat& s);
double max_symmetric_eigenvalue(const Mat& s);

bool is_hurwitz(const Mat& a);

Vec stack(const std::vector<Vec>& blocks);

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace meicmp
