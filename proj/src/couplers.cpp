#include "meicmp/couplers.hpp"

#include "meicmp/error.hpp"

#include <cmath>

namespace meicmp {

double paper_psi(double x) {
  // log((e^x + 1)/2) = softplus(x) - log 2, evaluated without overflow.
  const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  const double L = softplus - std::log(2.0);
  const double L2 = L * L;
  const double sgn = (x > 0.0) - (x < 0.0);
  return std::asin(L2 * sgn / (L2 + 1.0));
}

namespace {

Vec apply_maps(const std::vector<ScalarMap>& maps, const Vec& x) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = maps[i](x(i));
  return out;
}

void check_io(const ControllerModel& c, const Vec& eta, const Vec& zeta) {
  require(eta.size() == c.state_dim(), ErrorCode::DimensionMismatch, "controller state has wrong length");
  require(zeta.size() == c.io_dim, ErrorCode::DimensionMismatch, "controller input has wrong length");
}

}  // namespace

int ControllerModel::state_dim() const {
  switch (kind) {
    case Kind::Reconfigured: return inner->state_dim();
    case Kind::Custom: return custom_state_dim;
    default: return io_dim;
  }
}

bool ControllerModel::has_feedthrough() const {
  switch (kind) {
    case Kind::Reconfigured: return inner->has_feedthrough();
    case Kind::Custom: return custom_feedthrough;
    default: return false;
  }
}

Vec ControllerModel::initial_state() const {
  if (eta0.size() > 0) return eta0;
  if (kind == Kind::Reconfigured) return inner->initial_state();
  return Vec::Zero(state_dim());
}

const ControllerModel& ControllerModel::base() const { return kind == Kind::Reconfigured ? inner->base() : *this; }

ControllerModel make_nonlinear_integrator(int d, const ScalarMap& psi) {
  ControllerModel c;
  c.kind = ControllerModel::Kind::NonlinearIntegrator;
  c.io_dim = d;
  c.psi.assign(d, psi);
  return c;
}

ControllerModel make_nonlinear_filter(int d, const ScalarMap& psi) {
  require(psi.strictly_increasing(), ErrorCode::UnsupportedKind, "filter controller needs a strictly increasing map");
  ControllerModel c;
  c.kind = ControllerModel::Kind::NonlinearFilter;
  c.io_dim = d;
  c.psi.assign(d, psi);
  return c;
}

ControllerModel make_linear_synthesis(Vec offset) {
  ControllerModel c;
  c.kind = ControllerModel::Kind::LinearSynthesis;
  c.io_dim = static_cast<int>(offset.size());
  c.offset = std::move(offset);
  return c;
}

ControllerModel make_reconfigured(const ControllerModel& inner, Vec alpha, Vec beta) {
  require(alpha.size() == inner.io_dim && beta.size() == inner.io_dim, ErrorCode::DimensionMismatch,
          "reconfiguration offsets have wrong length");
  ControllerModel c;
  c.kind = ControllerModel::Kind::Reconfigured;
  c.io_dim = inner.io_dim;
  // Nested wrappers collapse: offsets add up.
  if (inner.kind == ControllerModel::Kind::Reconfigured) {
    c.inner = inner.inner;
    c.alpha = inner.alpha + alpha;
    c.beta = inner.beta + beta;
    c.eta0 = inner.eta0;
  } else {
    c.inner = std::make_shared<const ControllerModel>(inner);
    c.alpha = std::move(alpha);
    c.beta = std::move(beta);
  }
  return c;
}

ControllerModel make_custom_controller(int state_dim, int io_dim, std::function<Vec(const Vec&, const Vec&)> f,
                                       std::function<Vec(const Vec&, const Vec&)> h,
                                       std::optional<VectorRelation> relation, bool feedthrough) {
  require(static_cast<bool>(f) && static_cast<bool>(h), ErrorCode::UnsupportedKind, "custom controller needs f and h");
  ControllerModel c;
  c.kind = ControllerModel::Kind::Custom;
  c.io_dim = io_dim;
  c.custom_state_dim = state_dim;
  c.f = std::move(f);
  c.h = std::move(h);
  c.custom_relation = std::move(relation);
  c.custom_feedthrough = feedthrough;
  return c;
}

ControllerModel with_initial_state(ControllerModel c, Vec eta0) {
  require(eta0.size() == c.state_dim(), ErrorCode::DimensionMismatch, "controller initial state has wrong length");
  c.eta0 = std::move(eta0);
  return c;
}

Vec controller_rhs(const ControllerModel& c, const Vec& eta, const Vec& zeta) {
  check_io(c, eta, zeta);
  switch (c.kind) {
    case ControllerModel::Kind::NonlinearIntegrator: return zeta;
    case ControllerModel::Kind::NonlinearFilter: return -eta + zeta;
    case ControllerModel::Kind::LinearSynthesis: return -eta + zeta - c.offset;
    case ControllerModel::Kind::Reconfigured: return controller_rhs(*c.inner, eta, zeta - c.alpha);
    case ControllerModel::Kind::Custom: return c.f(eta, zeta);
  }
  return Vec();
}

Vec controller_output(const ControllerModel& c, const Vec& eta, const Vec& zeta) {
  check_io(c, eta, zeta);
  switch (c.kind) {
    case ControllerModel::Kind::NonlinearIntegrator:
    case ControllerModel::Kind::NonlinearFilter: return apply_maps(c.psi, eta);
    case ControllerModel::Kind::LinearSynthesis: return eta;
    case ControllerModel::Kind::Reconfigured: return controller_output(*c.inner, eta, zeta - c.alpha) + c.beta;
    case ControllerModel::Kind::Custom: return c.h(eta, zeta);
  }
  return Vec();
}

VectorRelation controller_ss_relation(const ControllerModel& c) {
  switch (c.kind) {
    case ControllerModel::Kind::NonlinearIntegrator: return VectorRelation::integrator(c.io_dim);
    case ControllerModel::Kind::NonlinearFilter:
      return VectorRelation::gradient_of(IntegralFunction::separable(c.psi));
    case ControllerModel::Kind::LinearSynthesis:
      return VectorRelation::affine(Mat::Identity(c.io_dim, c.io_dim), -c.offset);
    case ControllerModel::Kind::Reconfigured:
      return VectorRelation::shifted(controller_ss_relation(*c.inner), c.alpha, c.beta);
    case ControllerModel::Kind::Custom:
      require(c.custom_relation.has_value(), ErrorCode::UnsupportedKind, "custom controller has no declared relation");
      return *c.custom_relation;
  }
  fail(ErrorCode::UnsupportedKind, "unknown controller kind");
}

Vec controller_equilibrium_state(const ControllerModel& c, const Vec& zeta, const Vec& mu) {
  require(zeta.size() == c.io_dim && mu.size() == c.io_dim, ErrorCode::DimensionMismatch,
          "steady-state pair has wrong length");
  switch (c.kind) {
    case ControllerModel::Kind::NonlinearIntegrator: {
      Vec eta(c.io_dim);
      for (int i = 0; i < c.io_dim; ++i) eta(i) = c.psi[i].inverse_value(mu(i));
      require(eta.allFinite(), ErrorCode::OutsideDomain, "flow value outside the range of the controller map");
      return eta;
    }
    case ControllerModel::Kind::NonlinearFilter: return zeta;
    case ControllerModel::Kind::LinearSynthesis: return mu;
    case ControllerModel::Kind::Reconfigured:
      return controller_equilibrium_state(*c.inner, zeta - c.alpha, mu - c.beta);
    case ControllerModel::Kind::Custom: break;
  }
  fail(ErrorCode::UnsupportedKind, "no equilibrium map for custom controllers");
}

}  // namespace meicmp
