#include "meicmp/plants.hpp"

#include "meicmp/error.hpp"

#include <cmath>
#include <numbers>

namespace meicmp {

namespace {

Vec or_zero(Vec v, int n) { return v.size() == 0 ? Vec::Zero(n) : v; }

Vec applied_input(const AgentModel& m, const Vec& u) {
  require(u.size() == m.io_dim, ErrorCode::DimensionMismatch, "agent input has wrong length");
  return m.z.size() == 0 ? u : Vec(u + m.z);
}

Eigen::FullPivLU<Mat> checked_lu(const Mat& a, ErrorCode code, const char* what) {
  require(a.rows() == a.cols(), ErrorCode::DimensionMismatch, what);
  Eigen::FullPivLU<Mat> lu(a);
  lu.setThreshold(1e-12);
  require(lu.isInvertible(), code, what);
  return lu;
}

// Component k of the Halton sequence in base b.
double halton(int index, int base) {
  double f = 1.0;
  double r = 0.0;
  for (int i = index; i > 0; i /= base) {
    f /= base;
    r += f * (i % base);
  }
  return r;
}

std::vector<Vec> sphere_directions(int d) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  const int count = 64 * d;
  const int pairs = (d + 1) / 2;
  std::vector<Vec> out;
  out.reserve(count);
  for (int k = 1; k <= count; ++k) {
    Vec s(2 * pairs);
    for (int j = 0; j < pairs; ++j) {
      const int b1 = primes[(2 * j) % 20];
      const int b2 = primes[(2 * j + 1) % 20];
      // Box-Muller on a quasi-random pair.
      const double a = std::max(halton(k, b1), 1e-12);
      const double t = halton(k, b2);
      const double r = std::sqrt(-2.0 * std::log(a));
      s(2 * j) = r * std::cos(2.0 * std::numbers::pi * t);
      s(2 * j + 1) = r * std::sin(2.0 * std::numbers::pi * t);
    }
    Vec dir = s.head(d);
    if (dir.norm() < 1e-12) dir = Vec::Unit(d, k % d);
    out.push_back(dir.normalized());
  }
  return out;
}

}  // namespace

int AgentModel::state_dim() const {
  switch (kind) {
    case Kind::Linear: return static_cast<int>(A.rows());
    case Kind::ConvexGradient: return static_cast<int>(J.rows());
    case Kind::DampedOscillator: return 2 * static_cast<int>(M.rows());
    case Kind::Custom: return custom_state_dim;
  }
  return 0;
}

bool AgentModel::has_feedthrough() const {
  switch (kind) {
    case Kind::Linear:
    case Kind::ConvexGradient: return T.size() > 0 && !T.isZero(0.0);
    case Kind::DampedOscillator: return false;
    case Kind::Custom: return custom_feedthrough;
  }
  return true;
}

AgentModel make_linear_agent(Mat A, Mat B, Mat C, Mat T, Vec w) {
  const auto n = A.rows();
  require(A.cols() == n && B.rows() == n && C.cols() == n && C.rows() == B.cols(), ErrorCode::DimensionMismatch,
          "linear agent matrices have inconsistent shapes");
  AgentModel m;
  m.kind = AgentModel::Kind::Linear;
  m.io_dim = static_cast<int>(B.cols());
  if (T.size() == 0) T = Mat::Zero(m.io_dim, m.io_dim);
  require(T.rows() == m.io_dim && T.cols() == m.io_dim, ErrorCode::DimensionMismatch, "feedthrough T has wrong shape");
  m.w = or_zero(std::move(w), static_cast<int>(n));
  require(m.w.size() == n, ErrorCode::DimensionMismatch, "exogenous input has wrong length");
  m.A = std::move(A);
  m.B = std::move(B);
  m.C = std::move(C);
  m.T = std::move(T);
  return m;
}

AgentModel make_convex_gradient_agent(IntegralFunction psi, Mat J, Mat B, Mat C, Mat T, Vec w) {
  const int n = psi.dim();
  require(J.rows() == n && J.cols() == n && B.rows() == n && C.cols() == n && C.rows() == B.cols(),
          ErrorCode::DimensionMismatch, "convex-gradient agent matrices have inconsistent shapes");
  require((J + J.transpose()).norm() <= 1e-12, ErrorCode::UnsupportedKind, "J must be skew-symmetric");
  require(psi.is_smooth(), ErrorCode::UnsupportedKind, "convex-gradient agent needs a differentiable psi");
  AgentModel m;
  m.kind = AgentModel::Kind::ConvexGradient;
  m.io_dim = static_cast<int>(B.cols());
  if (T.size() == 0) T = Mat::Zero(m.io_dim, m.io_dim);
  require(T.rows() == m.io_dim && T.cols() == m.io_dim, ErrorCode::DimensionMismatch, "feedthrough T has wrong shape");
  m.w = or_zero(std::move(w), n);
  require(m.w.size() == n, ErrorCode::DimensionMismatch, "exogenous input has wrong length");
  m.psi = std::move(psi);
  m.J = std::move(J);
  m.B = std::move(B);
  m.C = std::move(C);
  m.T = std::move(T);
  return m;
}

AgentModel make_damped_oscillator(Mat M, IntegralFunction psi, Mat B, Vec w) {
  const auto d = M.rows();
  require(M.cols() == d && B.rows() == d && B.cols() == d && psi.dim() == d, ErrorCode::DimensionMismatch,
          "oscillator matrices have inconsistent shapes");
  checked_lu(M, ErrorCode::SingularM, "oscillator M must be invertible");
  require(psi.is_smooth(), ErrorCode::UnsupportedKind, "oscillator damping potential must be differentiable");
  AgentModel m;
  m.kind = AgentModel::Kind::DampedOscillator;
  m.io_dim = static_cast<int>(d);
  m.w = or_zero(std::move(w), static_cast<int>(d));
  require(m.w.size() == d, ErrorCode::DimensionMismatch, "exogenous input has wrong length");
  m.M = std::move(M);
  m.psi = std::move(psi);
  m.B = std::move(B);
  return m;
}

AgentModel make_forced_oscillator(const Mat& Omega, const Mat& D, const Vec& xbar) {
  const auto lu = checked_lu(Omega, ErrorCode::SingularM, "Omega must be invertible");
  const int d = static_cast<int>(Omega.rows());
  return make_damped_oscillator(Omega, IntegralFunction::quadratic(D, Vec::Zero(d), 0.0), lu.inverse(),
                                Omega.transpose() * xbar);
}

AgentModel make_custom_agent(int state_dim, int io_dim, std::function<Vec(const Vec&, const Vec&)> f,
                             std::function<Vec(const Vec&, const Vec&)> h, std::optional<VectorRelation> relation,
                             bool feedthrough) {
  require(static_cast<bool>(f) && static_cast<bool>(h), ErrorCode::UnsupportedKind, "custom agent needs f and h");
  AgentModel m;
  m.kind = AgentModel::Kind::Custom;
  m.io_dim = io_dim;
  m.custom_state_dim = state_dim;
  m.f = std::move(f);
  m.h = std::move(h);
  m.custom_relation = std::move(relation);
  m.custom_feedthrough = feedthrough;
  return m;
}

AgentModel with_leader_offset(AgentModel agent, Vec z) {
  require(z.size() == agent.io_dim, ErrorCode::DimensionMismatch, "leader offset has wrong length");
  agent.z = std::move(z);
  return agent;
}

std::string to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Yes: return "Yes";
    case Verdict::Kind::YesStrict: return "YesStrict";
    case Verdict::Kind::No: return "No";
  }
  return "No";
}

VectorRelation linear_ss_relation(const Mat& A, const Mat& B, const Mat& C, const Mat& T, const Vec& w) {
  const auto lu = checked_lu(A, ErrorCode::SingularA, "A must be invertible");
  require(B.rows() == A.rows() && C.cols() == A.rows(), ErrorCode::DimensionMismatch, "linear matrices mismatch");
  const int d = static_cast<int>(B.cols());
  const Mat Tm = T.size() == 0 ? Mat::Zero(d, d) : T;
  const Mat S = -C * lu.solve(B) + Tm;
  const Vec v = w.size() == 0 ? Vec::Zero(d) : Vec(-C * lu.solve(w));
  return VectorRelation::affine(S, v);
}

Verdict is_meicmp_linear(const Mat& A, const Mat& B, const Mat& C, const Mat& T, double tol) {
  const auto lu = checked_lu(A, ErrorCode::SingularA, "A must be invertible");
  if (!is_hurwitz(A)) return {Verdict::Kind::No, "A is not Hurwitz"};
  const int d = static_cast<int>(B.cols());
  const Mat S = -C * lu.solve(B) + (T.size() == 0 ? Mat::Zero(d, d) : T);
  if ((S - S.transpose()).norm() > tol * (1.0 + S.norm())) return {Verdict::Kind::No, "steady-state gain is asymmetric"};
  const double lmin = min_symmetric_eigenvalue(0.5 * (S + S.transpose()));
  if (lmin <= tol) return {Verdict::Kind::No, "steady-state gain is not positive definite"};
  return {Verdict::Kind::Yes, "A Hurwitz and steady-state gain symmetric positive definite"};
}

VectorRelation oscillator_ss_relation(const Mat& M, const Mat& B, const IntegralFunction& psi, const Vec& w) {
  const auto lu = checked_lu(M.transpose(), ErrorCode::SingularM, "M must be invertible");
  const int d = static_cast<int>(M.rows());
  const Vec wv = w.size() == 0 ? Vec::Zero(d) : w;
  const Vec g0 = psi.gradient(Vec::Zero(d));
  return VectorRelation::affine(lu.solve(B), lu.solve(wv - g0));
}

Verdict is_meicmp_oscillator(const Mat& M, const Mat& B, double tol) {
  const auto lu = checked_lu(M.transpose(), ErrorCode::SingularM, "M must be invertible");
  const Mat S = lu.solve(B);
  if ((S - S.transpose()).norm() > tol * (1.0 + S.norm())) return {Verdict::Kind::No, "M^{-T} B is asymmetric"};
  const double lmin = min_symmetric_eigenvalue(0.5 * (S + S.transpose()));
  if (lmin > tol) return {Verdict::Kind::YesStrict, "M^{-T} B symmetric positive definite"};
  if (lmin >= -tol) return {Verdict::Kind::Yes, "M^{-T} B symmetric positive semi-definite"};
  return {Verdict::Kind::No, "M^{-T} B has a negative eigenvalue"};
}

EquilibriumResult solve_equilibrium(const AgentModel& model, const Vec& u, double tol, int max_iter) {
  require(model.kind == AgentModel::Kind::ConvexGradient, ErrorCode::UnsupportedKind,
          "equilibrium solver needs a convex-gradient agent");
  const IntegralFunction& psi = *model.psi;
  const Vec b = model.B * applied_input(model, u) + model.w;
  const int n = psi.dim();

  // Grow the ball until <x, grad psi(x) - b> >= 0 on its boundary; the skew
  // term drops out of this inner product.
  const auto dirs = sphere_directions(n);
  double rho = 1.0;
  bool certified = false;
  for (int grow = 0; grow < 64 && !certified; ++grow) {
    certified = true;
    for (const auto& s : dirs) {
      const Vec x = rho * s;
      if (x.dot(psi.gradient(x) - b) < -1e-10) {
        certified = false;
        break;
      }
    }
    if (!certified) rho *= 2.0;
  }
  if (!certified) fail(ErrorCode::RadiusNotFound, "no certified ball radius for the equilibrium search");

  auto F = [&](const Vec& x) -> Vec { return psi.gradient(x) - model.J * x - b; };
  Vec x = Vec::Zero(n);
  Vec r = F(x);
  EquilibriumResult res;
  res.ball_radius = rho;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (r.norm() <= tol) break;
    const Mat Jac = psi.hessian(x) - model.J;
    Vec dx = Jac.fullPivLu().solve(-r);
    if (!dx.allFinite()) dx = -r;
    double t = 1.0;
    Vec xn = x + dx;
    Vec rn = F(xn);
    while (!(rn.allFinite() && rn.norm() <= (1.0 - 1e-4 * t) * r.norm()) && t > 1e-12) {
      t *= 0.5;
      xn = x + t * dx;
      rn = F(xn);
    }
    if (t <= 1e-12) break;
    x = std::move(xn);
    r = std::move(rn);
  }
  res.x0 = x;
  res.residual = r.norm();
  if (!(res.residual <= tol)) fail(ErrorCode::NoConvergence, "equilibrium Newton iteration did not converge");
  return res;
}

VectorRelation agent_ss_relation(const AgentModel& m) {
  VectorRelation base = [&]() -> VectorRelation {
    switch (m.kind) {
      case AgentModel::Kind::Linear: return linear_ss_relation(m.A, m.B, m.C, m.T, m.w);
      case AgentModel::Kind::DampedOscillator: return oscillator_ss_relation(m.M, m.B, *m.psi, m.w);
      case AgentModel::Kind::ConvexGradient: {
        const int n = m.psi->dim();
        const int d = m.io_dim;
        const bool identity_io = n == d && m.B.isIdentity(1e-14) && m.C.isIdentity(1e-14);
        if (identity_io && m.J.isZero(1e-14) && m.T.isZero(0.0)) {
          // y = (grad psi)^{-1}(u + w): the inverse relation is the gradient of psi - w^T y.
          return VectorRelation::inverse_gradient_of(
              IntegralFunction::shifted(*m.psi, Vec::Zero(n), -m.w, 0.0));
        }
        AgentModel plain = m;
        plain.z = Vec();
        auto fwd = [plain](const Vec& u) -> Vec {
          const EquilibriumResult eq = solve_equilibrium(plain, u);
          return plain.C * eq.x0 + plain.T * u;
        };
        VectorRelation::PointFn inv;
        if (m.T.isZero(0.0) && n == d) {
          Eigen::FullPivLU<Mat> bl(m.B);
          Eigen::FullPivLU<Mat> cl(m.C);
          if (bl.isInvertible() && cl.isInvertible()) {
            inv = [plain, bl, cl](const Vec& y) -> Vec {
              const Vec x = cl.solve(y);
              return bl.solve(plain.psi->gradient(x) - plain.J * x - plain.w);
            };
          }
        }
        return VectorRelation::map(d, "convex-gradient equilibrium", fwd, inv);
      }
      case AgentModel::Kind::Custom:
        require(m.custom_relation.has_value(), ErrorCode::UnsupportedKind, "custom agent has no declared relation");
        return *m.custom_relation;
    }
    fail(ErrorCode::UnsupportedKind, "unknown agent kind");
  }();
  if (m.kind == AgentModel::Kind::Custom || !m.is_leader()) return base;
  // k_z(u) = k(u + z)
  return VectorRelation::shifted(base, -m.z, Vec::Zero(m.io_dim));
}

Vec agent_equilibrium_state(const AgentModel& m, const Vec& u) {
  const Vec ua = applied_input(m, u);
  switch (m.kind) {
    case AgentModel::Kind::Linear: {
      const auto lu = checked_lu(m.A, ErrorCode::SingularA, "A must be invertible");
      return -lu.solve(m.B * ua + m.w);
    }
    case AgentModel::Kind::ConvexGradient: return solve_equilibrium(m, u).x0;
    case AgentModel::Kind::DampedOscillator: {
      const int d = m.io_dim;
      const auto lu = checked_lu(m.M.transpose(), ErrorCode::SingularM, "M must be invertible");
      Vec x = Vec::Zero(2 * d);
      x.head(d) = lu.solve(m.B * ua + m.w - m.psi->gradient(Vec::Zero(d)));
      return x;
    }
    case AgentModel::Kind::Custom: break;
  }
  fail(ErrorCode::UnsupportedKind, "no equilibrium map for custom agents");
}

Vec rhs(const AgentModel& m, const Vec& x, const Vec& u) {
  require(x.size() == m.state_dim(), ErrorCode::DimensionMismatch, "agent state has wrong length");
  const Vec ua = applied_input(m, u);
  switch (m.kind) {
    case AgentModel::Kind::Linear: return m.A * x + m.B * ua + m.w;
    case AgentModel::Kind::ConvexGradient: return -m.psi->gradient(x) + m.J * x + m.B * ua + m.w;
    case AgentModel::Kind::DampedOscillator: {
      const int d = m.io_dim;
      Vec dx(2 * d);
      const auto q = x.head(d);
      const auto p = x.tail(d);
      dx.head(d) = m.M * p;
      dx.tail(d) = -m.M.transpose() * q - m.psi->gradient(p) + m.B * ua + m.w;
      return dx;
    }
    case AgentModel::Kind::Custom: return m.f(x, ua);
  }
  return Vec();
}

Vec output(const AgentModel& m, const Vec& x, const Vec& u) {
  require(x.size() == m.state_dim(), ErrorCode::DimensionMismatch, "agent state has wrong length");
  switch (m.kind) {
    case AgentModel::Kind::Linear:
    case AgentModel::Kind::ConvexGradient: {
      if (!m.has_feedthrough()) return m.C * x;
      return m.C * x + m.T * applied_input(m, u);
    }
    case AgentModel::Kind::DampedOscillator: return x.head(m.io_dim);
    case AgentModel::Kind::Custom: return m.h(x, applied_input(m, u));
  }
  return Vec();
}

}  // namespace meicmp
