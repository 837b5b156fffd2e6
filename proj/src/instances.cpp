#include "meicmp/instances.hpp"

#include <algorithm>

namespace meicmp {

Mat random_gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

Vec random_gaussian_vec(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

Mat random_orthogonal(int d, Rng& rng) {
  const Mat g = random_gaussian(d, d, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

Mat random_spd(int d, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const Mat q = random_orthogonal(d, rng);
  Vec ev(d);
  for (int i = 0; i < d; ++i) ev(i) = u(rng);
  Mat s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

Mat random_well_conditioned(int d, Rng& rng, double cond) {
  std::uniform_real_distribution<double> u(1.0, std::max(1.0, cond));
  const Mat left = random_orthogonal(d, rng);
  const Mat right = random_orthogonal(d, rng);
  Vec s(d);
  for (int i = 0; i < d; ++i) s(i) = u(rng);
  return left * s.asDiagonal() * right.transpose();
}

AgentModel random_forced_oscillator(int d, Rng& rng, double cond, double d_lo, double d_hi, double xbar_scale,
                                   double sigma_min) {
  // The slowest plant mode decays at roughly min(lambda_min(D) / 2, sigma_min^2 / lambda_max(D)).
  const Mat omega = sigma_min * random_well_conditioned(d, rng, cond);
  const Mat damping = random_spd(d, rng, d_lo, d_hi);
  const Vec xbar = xbar_scale * random_gaussian_vec(d, rng);
  return make_forced_oscillator(omega, damping, xbar);
}

AgentModel random_meicmp_linear_agent(int d, Rng& rng, double w_scale) {
  std::uniform_real_distribution<double> rate(0.5, 2.0);
  const Mat a = -rate(rng) * Mat::Identity(d, d);
  const Mat b = random_well_conditioned(d, rng, 4.0);
  const Mat c = b.transpose();
  const Mat t = random_spd(d, rng, 0.0, 0.5);
  const Vec w = w_scale * random_gaussian_vec(d, rng);
  return make_linear_agent(a, b, c, t, w);
}

}  // namespace meicmp
