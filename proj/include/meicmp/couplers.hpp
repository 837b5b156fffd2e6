#pragma once

#include "meicmp/linalg.hpp"
#include "meicmp/relations.hpp"
#include "meicmp/scalar_map.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace meicmp {

/// arcsin( L^2 sgn(x) / (L^2 + 1) ) with L = log((e^x + 1) / 2).
double paper_psi(double x);

/// Edge dynamics driven by the relative output zeta.
///
///   NonlinearIntegrator  eta' = zeta,                mu = psi(eta)
///   NonlinearFilter      eta' = -eta + zeta,         mu = psi(eta)
///   LinearSynthesis      eta' = -eta + zeta - o,     mu = eta
///   Reconfigured         inner driven by zeta - alpha, output + beta
///   Custom               eta' = f(eta, zeta),        mu = h(eta, zeta)
///
/// psi acts coordinatewise.
struct ControllerModel {
  enum class Kind { NonlinearIntegrator, NonlinearFilter, LinearSynthesis, Reconfigured, Custom };

  Kind kind = Kind::LinearSynthesis;
  int io_dim = 0;
  std::vector<ScalarMap> psi;
  Vec offset;
  std::shared_ptr<const ControllerModel> inner;
  Vec alpha;
  Vec beta;
  Vec eta0;

  std::function<Vec(const Vec&, const Vec&)> f;
  std::function<Vec(const Vec&, const Vec&)> h;
  int custom_state_dim = 0;
  bool custom_feedthrough = true;
  std::optional<VectorRelation> custom_relation;

  int state_dim() const;
  bool has_feedthrough() const;
  /// Initial state (defaults to zero).
  Vec initial_state() const;
  /// Innermost non-reconfigured controller.
  const ControllerModel& base() const;
};

ControllerModel make_nonlinear_integrator(int d, const ScalarMap& psi);
ControllerModel make_nonlinear_filter(int d, const ScalarMap& psi);
ControllerModel make_linear_synthesis(Vec offset);
ControllerModel make_reconfigured(const ControllerModel& inner, Vec alpha, Vec beta);
ControllerModel make_custom_controller(int state_dim, int io_dim, std::function<Vec(const Vec&, const Vec&)> f,
                                       std::function<Vec(const Vec&, const Vec&)> h,
                                       std::optional<VectorRelation> relation, bool feedthrough = true);
/// Same controller with a different initial state.
ControllerModel with_initial_state(ControllerModel c, Vec eta0);

Vec controller_rhs(const ControllerModel& c, const Vec& eta, const Vec& zeta);
Vec controller_output(const ControllerModel& c, const Vec& eta, const Vec& zeta);
VectorRelation controller_ss_relation(const ControllerModel& c);

/// Controller state realizing the steady-state pair (zeta, mu).
Vec controller_equilibrium_state(const ControllerModel& c, const Vec& zeta, const Vec& mu);

}  // namespace meicmp
