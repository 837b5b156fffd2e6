#pragma once

#include "meicmp/couplers.hpp"
#include "meicmp/linalg.hpp"
#include "meicmp/plants.hpp"

#include <random>

namespace meicmp {

using Rng = std::mt19937_64;

Mat random_gaussian(int rows, int cols, Rng& rng);
Vec random_gaussian_vec(int n, Rng& rng);
/// Random orthogonal matrix (QR of a Gaussian matrix with sign fix).
Mat random_orthogonal(int d, Rng& rng);
/// Symmetric positive definite matrix with eigenvalues drawn in [lo, hi].
Mat random_spd(int d, Rng& rng, double lo, double hi);
/// Invertible matrix U diag(s) V^T with singular values in [1, cond].
Mat random_well_conditioned(int d, Rng& rng, double cond);

/// Damped planar oscillator of the formation example: random Omega with
/// singular values in [sigma_min, sigma_min * cond], damping D with
/// eigenvalues in [d_lo, d_hi].
AgentModel random_forced_oscillator(int d, Rng& rng, double cond = 10.0, double d_lo = 0.5, double d_hi = 2.0,
                                   double xbar_scale = 1.0, double sigma_min = 1.0);

/// Linear agent with A = -a I, C = B^T and T PSD, so that the steady-state
/// gain -C A^{-1} B + T = B^T B / a + T is symmetric positive definite.
AgentModel random_meicmp_linear_agent(int d, Rng& rng, double w_scale = 1.0);

}  // namespace meicmp
