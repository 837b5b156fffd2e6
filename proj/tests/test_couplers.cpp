#include "doctest.h"

#include "meicmp/couplers.hpp"
#include "meicmp/error.hpp"
#include "meicmp/instances.hpp"
#include "meicmp/integral_function.hpp"

#include <cmath>

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

// Direct transcription of the formula, used as an independent oracle.
double psi_oracle(double x) {
  const double l = std::log((std::exp(x) + 1.0) / 2.0);
  const double sgn = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
  return std::asin(l * l * sgn / (l * l + 1.0));
}

}  // namespace

TEST_CASE("controller right-hand sides at equilibria") {
  const Vec o = vec({1, -2});
  const auto lin = make_linear_synthesis(o);
  const Vec zeta = vec({0.5, 0.5});
  CHECK(controller_rhs(lin, zeta - o, zeta).norm() == 0.0);

  const auto integ = make_nonlinear_integrator(2, ScalarMap::paper_psi());
  CHECK(controller_rhs(integ, vec({3, -1}), Vec::Zero(2)).norm() == 0.0);
  CHECK(controller_rhs(integ, vec({3, -1}), vec({1, 2})).isApprox(vec({1, 2})));

  const Vec alpha = vec({2, 0}), beta = vec({0, 7});
  const auto rec = make_reconfigured(lin, alpha, beta);
  const Vec eta = vec({0.25, -4});
  CHECK(controller_rhs(rec, eta, alpha + eta + o).norm() < 1e-14);

  CHECK(code_of([&] { controller_rhs(lin, vec({1}), zeta); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("controller outputs") {
  const auto lin = make_linear_synthesis(vec({1, 1}));
  CHECK(controller_output(lin, vec({3, 4}), vec({100, 100})).isApprox(vec({3, 4})));

  const auto integ = make_nonlinear_integrator(2, ScalarMap::paper_psi());
  CHECK(controller_output(integ, Vec::Zero(2), Vec::Zero(2)).norm() == 0.0);
  CHECK(controller_output(integ, vec({1, -2}), Vec::Zero(2)).isApprox(vec({psi_oracle(1), psi_oracle(-2)})));

  const auto rec = make_reconfigured(integ, vec({0, 0}), vec({1, 0}));
  CHECK(controller_output(rec, Vec::Zero(2), Vec::Zero(2)).isApprox(vec({1, 0})));

  const auto filt = make_nonlinear_filter(2, ScalarMap::paper_psi());
  CHECK(controller_rhs(filt, vec({1, 1}), vec({1, 1})).norm() == 0.0);
  CHECK(controller_output(filt, vec({0.5, 0}), Vec::Zero(2))(0) == doctest::Approx(psi_oracle(0.5)));
}

TEST_CASE("controller steady-state relations") {
  const Vec o = vec({1, 2});
  const auto lin = controller_ss_relation(make_linear_synthesis(o));
  CHECK(lin.forward(vec({5, 5})).basepoint().isApprox(vec({4, 3})));

  const auto ident = make_linear_synthesis(Vec::Zero(2));
  const auto rec0 = controller_ss_relation(make_reconfigured(ident, Vec::Zero(2), Vec::Zero(2)));
  CHECK(rec0.forward(vec({-1, 3})).basepoint().isApprox(vec({-1, 3})));

  const Vec alpha = vec({0.5, -1}), beta = vec({2, 2});
  const auto rec = controller_ss_relation(make_reconfigured(make_linear_synthesis(o), alpha, beta));
  const Vec zeta = vec({3, 1});
  CHECK(rec.forward(zeta).basepoint().isApprox(zeta - alpha - o + beta));

  // Integrator: only zeta = 0 is admissible and mu ranges over the range of psi.
  const auto integ = controller_ss_relation(make_nonlinear_integrator(1, ScalarMap::paper_psi()));
  CHECK(integ.forward(vec({0.1})).is_empty());
  CHECK(integ.forward(vec({0})).contains(vec({0.9}), 1e-12));
  CHECK(integ.inverse(vec({0.9})).basepoint().norm() == 0.0);

  const auto custom = make_custom_controller(
      1, 1, [](const Vec& e, const Vec& z) { return Vec(z - e); }, [](const Vec& e, const Vec&) { return e; },
      std::nullopt, false);
  CHECK(code_of([&] { controller_ss_relation(custom); }) == ErrorCode::UnsupportedKind);
}

TEST_CASE("steady-state consistency of controller kinds") {
  Rng rng(5);
  const Vec o = vec({0.2, -0.3});
  std::vector<ControllerModel> cs = {
      make_linear_synthesis(o),
      make_nonlinear_filter(2, ScalarMap::paper_psi()),
      make_nonlinear_filter(2, ScalarMap::cubic(1.0, 1.0)),
      make_reconfigured(make_nonlinear_filter(2, ScalarMap::paper_psi()), vec({1, -1}), vec({0.5, 0.5})),
      make_reconfigured(make_linear_synthesis(o), vec({2, 0}), vec({0, -3})),
  };
  for (const auto& c : cs) {
    const auto rel = controller_ss_relation(c);
    for (int k = 0; k < 20; ++k) {
      const Vec zeta = random_gaussian_vec(2, rng);
      const auto mu_set = rel.forward(zeta);
      REQUIRE(mu_set.is_point());
      const Vec mu = mu_set.basepoint();
      const Vec eta = controller_equilibrium_state(c, zeta, mu);
      CHECK(controller_rhs(c, eta, zeta).norm() <= 1e-8);
      CHECK((controller_output(c, eta, zeta) - mu).norm() <= 1e-8);
    }
  }
  // Integrator equilibria: zeta = 0 and any mu in the range of psi.
  const auto integ = make_nonlinear_integrator(2, ScalarMap::paper_psi());
  const Vec mu = vec({0.7, -0.2});
  const Vec eta = controller_equilibrium_state(integ, Vec::Zero(2), mu);
  CHECK(controller_rhs(integ, eta, Vec::Zero(2)).norm() == 0.0);
  CHECK((controller_output(integ, eta, Vec::Zero(2)) - mu).norm() <= 1e-8);
}

TEST_CASE("reconfiguration shift law") {
  Rng rng(19);
  const auto inner = make_nonlinear_filter(3, ScalarMap::cubic(0.5, 1.0));
  const auto inner_rel = controller_ss_relation(inner);
  for (int k = 0; k < 30; ++k) {
    const Vec alpha = random_gaussian_vec(3, rng), beta = random_gaussian_vec(3, rng);
    const Vec zeta = random_gaussian_vec(3, rng);
    const auto rec_rel = controller_ss_relation(make_reconfigured(inner, alpha, beta));
    const Vec lhs = rec_rel.forward(zeta).basepoint();
    const Vec rhs = inner_rel.forward(zeta - alpha).basepoint() + beta;
    CHECK((lhs - rhs).norm() <= 1e-10);
  }
}

TEST_CASE("saturating psi map") {
  CHECK(paper_psi(0.0) == 0.0);
  for (int k = -400; k <= 400; ++k) {
    const double x = 0.05 * k;
    CHECK(paper_psi(x) == doctest::Approx(psi_oracle(x)).epsilon(1e-13));
    if (x > 0) CHECK(paper_psi(x) > 0.0);
    CHECK(paper_psi(x) <= paper_psi(x + 0.05));
  }
  // Odd symmetry is not implied by the formula; record the measured behaviour against the oracle.
  for (double x : {0.5, 1.0, 3.0}) {
    CHECK(paper_psi(-x) == doctest::Approx(psi_oracle(-x)));
    CHECK(paper_psi(-x) < 0.0);
  }
}

TEST_CASE("integral of the integrator nonlinearity is convex") {
  const auto gamma = IntegralFunction::separable(ScalarMap::paper_psi(), 1);
  for (int i = -30; i <= 30; ++i) {
    for (int j = -30; j <= 30; ++j) {
      const double a = 0.2 * i, b = 0.2 * j;
      const double mid = gamma.value(vec({0.5 * (a + b)}));
      CHECK(mid <= 0.5 * (gamma.value(vec({a})) + gamma.value(vec({b}))) + 1e-10);
    }
  }
}
