#include "doctest.h"

#include "meicmp/error.hpp"
#include "meicmp/instances.hpp"
#include "meicmp/simulate.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

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

Mat one(double x) { return Mat::Constant(1, 1, x); }

AgentModel shifted_agent(double c) { return make_linear_agent(one(-1), one(1), one(1), one(0), vec({c})); }

ClosedLoopSystem decay_system() { return ClosedLoopSystem(build_graph(1, {}), {shifted_agent(0)}, {}); }

// Agents y = u + a with a = (0, 3), one edge with mu = eta and eta' = -eta + zeta:
// the steady state is y = (1, 2), mu = 1.
ClosedLoopSystem hand_system() {
  return ClosedLoopSystem(build_graph(2, {{0, 1}}), {shifted_agent(0), shifted_agent(3)},
                          {make_linear_synthesis(vec({0}))});
}

double rk4_endpoint_error(double dt) {
  SimOptions o;
  o.method = OdeMethod::RK4;
  o.dt = dt;
  o.record_every = 0.0;
  const auto traj = integrate(decay_system(), vec({1}), 1.0, o);
  return std::abs(traj.states.back()(0) - std::exp(-1.0));
}

}  // namespace

TEST_CASE("scalar decay matches the exponential") {
  SimOptions o;
  const auto traj = integrate(decay_system(), vec({1}), 1.0, o);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  CHECK(std::abs(traj.states.back()(0) - std::exp(-1.0)) <= 1e-6);
  for (std::size_t k = 1; k < traj.times.size(); ++k) CHECK(traj.times[k] > traj.times[k - 1]);
  CHECK(rk4_endpoint_error(1e-2) <= 1e-6);
}

TEST_CASE("RK4 is fourth order") {
  const double ratio = rk4_endpoint_error(0.1) / rk4_endpoint_error(0.05);
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("step_rhs") {
  const auto sys = hand_system();
  REQUIRE(sys.state_dim() == 3);
  SUBCASE("zero at the steady state") {
    CHECK(step_rhs(sys, vec({1, 2, 1})).norm() < 1e-14);
  }
  SUBCASE("single agent without edges is open loop") {
    CHECK(step_rhs(decay_system(), vec({2}))(0) == doctest::Approx(-2.0));
  }
  SUBCASE("matches the hand-expanded vector field") {
    Rng rng(4);
    for (int k = 0; k < 10; ++k) {
      const Vec s = random_gaussian_vec(3, rng);
      const double x0 = s(0), x1 = s(1), eta = s(2);
      // u = -E mu = (eta, -eta), zeta = x1 - x0.
      const Vec expected = vec({-x0 + eta, -x1 - eta + 3, -eta + (x1 - x0)});
      CHECK((step_rhs(sys, s) - expected).norm() < 1e-14);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK(code_of([&] { step_rhs(sys, vec({1, 2})); }) == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("algebraic loops are rejected") {
  const auto through = make_linear_agent(one(-1), one(1), one(1), one(1));
  const auto direct = make_custom_controller(
      0, 1, [](const Vec&, const Vec&) { return Vec(); }, [](const Vec&, const Vec& z) { return z; }, std::nullopt, true);
  CHECK(code_of([&] { ClosedLoopSystem(build_graph(2, {{0, 1}}), {through, through}, {direct}); }) ==
        ErrorCode::AlgebraicLoop);
  // Feedthrough on one side only is fine.
  const ClosedLoopSystem ok(build_graph(2, {{0, 1}}), {shifted_agent(0), shifted_agent(1)}, {direct});
  CHECK(ok.state_dim() == 2);
  const ClosedLoopSystem ok2(build_graph(2, {{0, 1}}), {through, through}, {make_linear_synthesis(vec({0}))});
  CHECK(ok2.state_dim() == 3);
}

TEST_CASE("trajectory started at a steady state stays put") {
  const auto sys = hand_system();
  SimOptions o;
  const auto traj = integrate(sys, vec({1, 2, 1}), 5.0, o);
  for (const auto& s : traj.states) CHECK((s - vec({1, 2, 1})).norm() <= 1e-9);
  const auto conv = detect_convergence(traj, 0.5, 1e-9);
  CHECK(conv.converged);
  CHECK(conv.t_conv <= 0.5 + 1e-9);
}

TEST_CASE("wiring identities hold at every sample") {
  Rng rng(6);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 3; ++i) agents.push_back(random_meicmp_linear_agent(2, rng, 1.0));
  const ClosedLoopSystem sys(build_graph(3, {{0, 1}, {1, 2}, {2, 0}}), agents,
                             std::vector<ControllerModel>(3, make_nonlinear_filter(2, ScalarMap::paper_psi())));
  SimOptions o;
  o.record_every = 0.1;
  const auto traj = integrate(sys, random_gaussian_vec(sys.state_dim(), rng), 5.0, o);
  REQUIRE(traj.signals.size() == traj.times.size());
  for (const auto& sig : traj.signals) {
    CHECK(sig.zeta == sys.op().tensions(sig.y));
    CHECK(sig.u == Vec(-sys.op().apply(sig.mu)));
  }
}

TEST_CASE("damped oscillator without input settles") {
  const Mat I2 = Mat::Identity(2, 2);
  Mat m(2, 2);
  m << 1, 0.4, 0, 1.2;
  const auto osc = make_damped_oscillator(m, IntegralFunction::quadratic(I2, Vec::Zero(2)), I2);
  const ClosedLoopSystem sys(build_graph(1, {}), {osc}, {});
  SimOptions o;
  o.tol = 1e-10;
  const auto traj = integrate(sys, vec({1, -2, 0.5, 0.5}), 60.0, o);
  const Vec end = traj.states.back();
  CHECK(end.tail(2).norm() <= 1e-6);
  // With u = 0 and grad psi(0) = 0 the resting position is q0 = 0.
  CHECK(end.head(2).norm() <= 1e-6);
}

TEST_CASE("convergence detection") {
  Trajectory flat;
  for (int k = 0; k <= 100; ++k) {
    flat.times.push_back(0.1 * k);
    flat.states.push_back(vec({1}));
    flat.signals.push_back({vec({0}), vec({1}), Vec(), Vec()});
  }
  const auto c = detect_convergence(flat, 1.0, 1e-9);
  CHECK(c.converged);
  CHECK(c.y_ss(0) == doctest::Approx(1.0));
  // Settled from the very first sample.
  CHECK(c.t_conv == doctest::Approx(0.0));

  const ClosedLoopSystem unstable(build_graph(1, {}), {make_linear_agent(one(1), one(1), one(1), one(0))}, {});
  SimOptions o;
  const auto traj = integrate(unstable, vec({1}), 5.0, o);
  CHECK_FALSE(detect_convergence(traj, 0.5, 1e-6).converged);
}

TEST_CASE("simulation matches the prediction") {
  const auto sys = hand_system();
  SimOptions o;
  const auto traj = integrate(sys, sys.default_initial_state(), 40.0, o);
  const auto problem = assemble(build_graph(2, {{0, 1}}), sys.agents(), sys.controllers());
  const auto cert = predict_steady_state(problem);
  const auto rep = compare_prediction(traj, cert, 1e-3);
  CHECK(rep.pass);
  CHECK(rep.y_error <= 1e-6);
  CHECK(rep.mu_error <= 1e-6);

  auto wrong = cert;
  wrong.y(0) += 0.1;
  CHECK_FALSE(compare_prediction(traj, wrong, 1e-3).pass);

  const auto short_traj = integrate(sys, sys.default_initial_state(), 1.0, o);
  CHECK(code_of([&] { compare_prediction(short_traj, cert, 1e-3); }) == ErrorCode::NotConverged);
}

TEST_CASE("consensus run compared after agreement alignment") {
  // Pure integrator plants x' = u, y = x leave the agreement component of y to the
  // initial condition, so the optimizer only knows y up to a common shift.
  const auto integ = make_custom_agent(
      1, 1, [](const Vec&, const Vec& u) { return u; }, [](const Vec& x, const Vec&) { return x; },
      VectorRelation::integrator(1), false);
  const ClosedLoopSystem sys(build_graph(3, {{0, 1}, {1, 2}}), {integ, integ, integ},
                             {make_linear_synthesis(vec({-1})), make_linear_synthesis(vec({-1}))});
  SimOptions o;
  const auto traj = integrate(sys, vec({4, 0, -1, 0, 0}), 40.0, o);
  const auto problem = assemble(build_graph(3, {{0, 1}, {1, 2}}), sys.agents(), sys.controllers());
  OppSolution sol;
  const auto cert = predict_steady_state(problem, {}, &sol);
  CHECK(sol.anchored);
  CHECK_FALSE(compare_prediction(traj, cert, 1e-3).pass);
  const auto rep = compare_prediction(traj, cert, 1e-3, 1);
  CHECK(rep.aligned);
  CHECK(rep.pass);
}

TEST_CASE("storage function decreases for integrator controllers") {
  // Linear agents x' = -a x + B u, y = B^T x  with storage 1/2 |x - xbar|^2 and
  // integrator controllers with linear psi and storage 1/2 |eta - etabar|^2.
  Rng rng(15);
  std::vector<AgentModel> agents;
  for (int i = 0; i < 3; ++i) {
    auto a = random_meicmp_linear_agent(2, rng, 1.0);
    a.T = Mat::Zero(2, 2);
    agents.push_back(a);
  }
  const auto g = build_graph(3, {{0, 1}, {1, 2}});
  const std::vector<ControllerModel> ctrls(2, make_nonlinear_integrator(2, ScalarMap::linear(1.0)));
  const ClosedLoopSystem sys(g, agents, ctrls);
  const auto cert = predict_steady_state(assemble(g, agents, ctrls));
  REQUIRE(cert.valid(1e-6));
  Vec target(sys.state_dim());
  for (int i = 0; i < 3; ++i)
    target.segment(sys.agent_offset(i), 2) = agent_equilibrium_state(agents[i], cert.u.segment(2 * i, 2));
  for (int e = 0; e < 2; ++e) target.segment(sys.controller_offset(e), 2) = cert.mu.segment(2 * e, 2);

  SimOptions o;
  o.tol = 1e-10;
  o.record_every = 0.05;
  const auto traj = integrate(sys, random_gaussian_vec(sys.state_dim(), rng), 20.0, o);
  double prev = kInf;
  for (const auto& s : traj.states) {
    const double v = 0.5 * (s - target).squaredNorm();
    CHECK(v <= prev + 1e-8);
    prev = v;
  }
}

TEST_CASE("trajectory CSV export") {
  const auto sys = hand_system();
  SimOptions o;
  o.record_every = 0.5;
  const auto traj = integrate(sys, sys.default_initial_state(), 1.0, o);
  const std::string csv = traj.to_csv(2, 1, 1);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,y[0.0],y[1.0],u[0.0],u[1.0],zeta[0.0],mu[0.0]");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == static_cast<int>(traj.times.size()));
}

TEST_CASE("integration rejects a zero horizon") {
  SimOptions o;
  CHECK(code_of([&] { integrate(decay_system(), vec({1}), 0.0, o); }) == ErrorCode::Usage);
}

TEST_CASE("run_parallel covers every index and propagates errors") {
  std::vector<std::atomic<int>> hits(37);
  run_parallel(37, 4, [&](int k) { hits[k]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK(code_of([] { run_parallel(10, 3, [](int k) { if (k == 7) fail(ErrorCode::SolverFailure, "boom"); }); }) ==
        ErrorCode::SolverFailure);
}
