#include "doctest.h"

#include "meicmp/error.hpp"
#include "meicmp/instances.hpp"
#include "meicmp/ode.hpp"
#include "meicmp/plants.hpp"

using namespace meicmp;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::Usage;
}

Mat I2() { return Mat::Identity(2, 2); }

Mat skew2() {
  Mat j(2, 2);
  j << 0, 1, -1, 0;
  return j;
}

}  // namespace

TEST_CASE("linear steady-state relation") {
  CHECK(linear_ss_relation(-I2(), I2(), I2(), Mat::Zero(2, 2)).S().isApprox(I2()));
  CHECK(linear_ss_relation(-I2(), I2(), I2(), Mat(vec({1, 2}).asDiagonal())).S().isApprox(Mat(vec({2, 3}).asDiagonal())));
  const auto scalar = linear_ss_relation(-2 * Mat::Identity(1, 1), Mat::Identity(1, 1), Mat::Identity(1, 1),
                                         Mat::Zero(1, 1));
  CHECK(scalar.S()(0, 0) == doctest::Approx(0.5));

  // The exogenous constant shifts the relation by -C A^{-1} w.
  const auto shifted = linear_ss_relation(-2 * I2(), I2(), I2(), Mat::Zero(2, 2), vec({2, -4}));
  CHECK(shifted.v().isApprox(vec({1, -2})));

  CHECK(code_of([] { linear_ss_relation(Mat::Zero(2, 2), I2(), I2(), Mat::Zero(2, 2)); }) == ErrorCode::SingularA);
  CHECK(code_of([] { linear_ss_relation(-I2(), Mat::Identity(3, 3), I2(), Mat::Zero(2, 2)); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("linear MEICMP classification") {
  CHECK(is_meicmp_linear(-I2(), I2(), I2(), Mat::Zero(2, 2), 1e-9).yes());
  // S = I + T with T = skew - I gives a skew S.
  const auto skew = is_meicmp_linear(-I2(), I2(), I2(), skew2() - I2(), 1e-9);
  CHECK_FALSE(skew.yes());
  CHECK_FALSE(skew.reason.empty());
  Mat unstable = -I2();
  unstable(0, 0) = 1.0;
  CHECK_FALSE(is_meicmp_linear(unstable, I2(), I2(), Mat::Zero(2, 2), 1e-9).yes());
  CHECK(code_of([] { is_meicmp_linear(Mat::Zero(2, 2), I2(), I2(), Mat::Zero(2, 2), 1e-9); }) ==
        ErrorCode::SingularA);
}

TEST_CASE("linear Yes implies sampled cyclic monotonicity") {
  Rng rng(44);
  int yes = 0;
  for (int k = 0; k < 10; ++k) {
    const auto a = random_meicmp_linear_agent(3, rng, 1.0);
    const auto verdict = is_meicmp_linear(a.A, a.B, a.C, a.T, 1e-9);
    if (!verdict.yes()) continue;
    ++yes;
    CmSampler sampler;
    sampler.seed = static_cast<std::uint64_t>(k);
    CHECK(check_cm(linear_ss_relation(a.A, a.B, a.C, a.T, a.w), sampler, 2000, 6, 1e-9).pass);
  }
  CHECK(yes == 10);
}

TEST_CASE("oscillator steady-state relation") {
  const auto psi = IntegralFunction::quadratic(I2(), Vec::Zero(2));
  const auto id = oscillator_ss_relation(I2(), I2(), psi);
  CHECK(id.S().isApprox(I2()));
  CHECK(id.v().norm() < 1e-14);

  // Paper oscillator: k(u) = (Omega Omega^T)^{-1} u + xbar and its inverse (Omega Omega^T)(y - xbar).
  Rng rng(3);
  const Mat omega = random_well_conditioned(2, rng, 3.0);
  const Mat damping = random_spd(2, rng, 0.5, 2.0);
  const Vec xbar = vec({0.5, -1.5});
  const auto agent = make_forced_oscillator(omega, damping, xbar);
  const auto rel = agent_ss_relation(agent);
  const Mat oo = omega * omega.transpose();
  const Vec u = vec({1, 2});
  CHECK(rel.forward(u).basepoint().isApprox(oo.ldlt().solve(u) + xbar, 1e-10));
  const Vec y = vec({-1, 3});
  CHECK(rel.inverse(y).basepoint().isApprox(oo * (y - xbar), 1e-10));

  CHECK(code_of([&] { oscillator_ss_relation(Mat::Zero(2, 2), I2(), psi); }) == ErrorCode::SingularM);
}

TEST_CASE("oscillator MEICMP classification") {
  CHECK(is_meicmp_oscillator(I2(), I2(), 1e-9).kind == Verdict::Kind::YesStrict);
  Mat m(2, 2);
  m << 2, 1, 0, 1;
  CHECK(is_meicmp_oscillator(m, -m.transpose(), 1e-9).kind == Verdict::Kind::No);
  CHECK(is_meicmp_oscillator(I2(), Mat(vec({1, 0}).asDiagonal()), 1e-9).kind == Verdict::Kind::Yes);
  CHECK(code_of([] { is_meicmp_oscillator(Mat::Zero(2, 2), I2(), 1e-9); }) == ErrorCode::SingularM);
}

TEST_CASE("convex-gradient equilibria") {
  const auto psi = IntegralFunction::quadratic(I2(), Vec::Zero(2));
  SUBCASE("J = 0 gives x0 = u") {
    const auto agent = make_convex_gradient_agent(psi, Mat::Zero(2, 2), I2(), I2());
    const auto eq = solve_equilibrium(agent, vec({0.3, -2}));
    CHECK(eq.x0.isApprox(vec({0.3, -2}), 1e-9));
    CHECK(eq.residual <= 1e-10);
  }
  SUBCASE("skew J") {
    const auto agent = make_convex_gradient_agent(psi, skew2(), I2(), I2());
    const auto eq = solve_equilibrium(agent, vec({1, 0}));
    CHECK(eq.x0.isApprox(vec({0.5, -0.5}), 1e-9));
    CHECK(eq.ball_radius > 0.0);
  }
  SUBCASE("zero input") {
    const auto agent = make_convex_gradient_agent(psi, skew2(), I2(), I2());
    CHECK(solve_equilibrium(agent, Vec::Zero(2)).x0.norm() < 1e-10);
  }
  SUBCASE("nonquadratic psi: residual is small") {
    const auto quartic = IntegralFunction::separable(ScalarMap::cubic(0.5, 1.0), 2);
    const auto agent = make_convex_gradient_agent(quartic, 0.5 * skew2(), I2(), I2());
    const Vec u = vec({3, -1});
    const auto eq = solve_equilibrium(agent, u, 1e-10);
    CHECK(eq.residual <= 1e-10);
    CHECK(rhs(agent, eq.x0, u).norm() <= 1e-9);
  }
}

TEST_CASE("right-hand sides vanish at equilibria") {
  const auto psi = IntegralFunction::quadratic(I2(), Vec::Zero(2));
  SUBCASE("damped oscillator") {
    Mat m(2, 2);
    m << 1, 0.5, 0, 2;
    const auto agent = make_damped_oscillator(m, psi, I2());
    const Vec u = vec({1, -1});
    // M^T q0 = B u with p = 0.
    const Vec q0 = m.transpose().lu().solve(u);
    Vec x(4);
    x << q0, Vec::Zero(2);
    CHECK(rhs(agent, x, u).norm() < 1e-12);
    CHECK(output(agent, x, u).isApprox(q0));
  }
  SUBCASE("linear at the origin") {
    const auto agent = make_linear_agent(-I2(), I2(), I2(), Mat::Zero(2, 2));
    CHECK(rhs(agent, Vec::Zero(2), Vec::Zero(2)).norm() == 0.0);
  }
  SUBCASE("convex gradient at x = u") {
    const auto agent = make_convex_gradient_agent(psi, Mat::Zero(2, 2), I2(), I2());
    CHECK(rhs(agent, vec({2, 3}), vec({2, 3})).norm() < 1e-14);
  }
  SUBCASE("leader offset is added to the input") {
    const auto agent = with_leader_offset(make_linear_agent(-I2(), I2(), I2(), Mat::Zero(2, 2)), vec({1, 0}));
    CHECK(agent.is_leader());
    CHECK(rhs(agent, Vec::Zero(2), Vec::Zero(2)).isApprox(vec({1, 0})));
  }
}

TEST_CASE("outputs") {
  const auto lin = make_linear_agent(-I2(), I2(), I2(), Mat::Zero(2, 2));
  CHECK(output(lin, vec({1, 2}), vec({5, 5})).isApprox(vec({1, 2})));
  const auto ft = make_linear_agent(-I2(), I2(), I2(), I2());
  CHECK(ft.has_feedthrough());
  CHECK(output(ft, vec({1, 2}), vec({1, 0})).isApprox(vec({2, 2})));
  CHECK(code_of([&] { output(ft, vec({1, 2, 3}), vec({1, 0})); }) == ErrorCode::DimensionMismatch);

  const auto osc = make_damped_oscillator(I2(), IntegralFunction::quadratic(I2(), Vec::Zero(2)), I2());
  CHECK_FALSE(osc.has_feedthrough());
  CHECK(output(osc, vec({7, 8, 9, 10}), Vec::Zero(2)).isApprox(vec({7, 8})));
}

TEST_CASE("convex-gradient trajectories decrease the distance to equilibrium") {
  Rng rng(12);
  const auto quartic = IntegralFunction::separable(ScalarMap::cubic(1.0, 0.5), 2);
  const auto agent = make_convex_gradient_agent(quartic, skew2(), I2(), I2());
  const Vec u = vec({1.5, -0.5});
  const Vec x0 = solve_equilibrium(agent, u).x0;
  OdeOptions opts;
  opts.method = OdeMethod::RK45;
  opts.tol = 1e-10;
  opts.record_every = 0.05;
  const auto sol = integrate_ode([&](double, const Vec& x) { return rhs(agent, x, u); }, 0.0,
                                 3.0 * random_gaussian_vec(2, rng), 10.0, opts);
  double prev = kInf;
  for (const auto& x : sol.x) {
    const double v = 0.5 * (x - x0).squaredNorm();
    CHECK(v <= prev + 1e-8);
    prev = v;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("oscillator energy decreases") {
  // With M = Omega and B = I, F(p, q) = 1/2 |p - p0|^2 + 1/2 |q - q0|^2 is a Lyapunov function.
  const auto psi = IntegralFunction::quadratic(I2(), Vec::Zero(2));
  Mat m(2, 2);
  m << 1.0, 0.3, -0.2, 1.5;
  const auto agent = make_damped_oscillator(m, psi, I2());
  const Vec u = vec({1, 1});
  const Vec q0 = m.transpose().lu().solve(u);
  OdeOptions opts;
  opts.method = OdeMethod::RK45;
  opts.tol = 1e-10;
  opts.record_every = 0.05;
  const auto sol = integrate_ode([&](double, const Vec& x) { return rhs(agent, x, u); }, 0.0, vec({2, -1, 0, 1}),
                                 30.0, opts);
  double prev = kInf;
  for (const auto& x : sol.x) {
    const double f = 0.5 * (x.head(2) - q0).squaredNorm() + 0.5 * x.tail(2).squaredNorm();
    CHECK(f <= prev + 1e-8);
    prev = f;
  }
}

TEST_CASE("simulated steady states match extracted relations") {
  Rng rng(77);
  for (int k = 0; k < 5; ++k) {
    const auto agent = random_meicmp_linear_agent(2, rng, 1.0);
    const Vec u = random_gaussian_vec(2, rng);
    OdeOptions opts;
    opts.method = OdeMethod::RK45;
    opts.tol = 1e-10;
    const auto sol = integrate_ode([&](double, const Vec& x) { return rhs(agent, x, u); }, 0.0, Vec::Zero(2), 40.0,
                                   opts);
    const Vec y = output(agent, sol.x.back(), u);
    CHECK((y - agent_ss_relation(agent).forward(u).basepoint()).norm() <= 1e-4);
    CHECK((agent_equilibrium_state(agent, u) - sol.x.back()).norm() <= 1e-4);
  }
  for (int k = 0; k < 3; ++k) {
    const auto agent = random_forced_oscillator(2, rng, 3.0, 1.0, 2.0, 1.0, 1.0);
    const Vec u = random_gaussian_vec(2, rng);
    OdeOptions opts;
    opts.method = OdeMethod::RK45;
    opts.tol = 1e-10;
    const auto sol = integrate_ode([&](double, const Vec& x) { return rhs(agent, x, u); }, 0.0,
                                   Vec::Zero(agent.state_dim()), 80.0, opts);
    const Vec y = output(agent, sol.x.back(), u);
    CHECK((y - agent_ss_relation(agent).forward(u).basepoint()).norm() <= 1e-4);
  }
}
