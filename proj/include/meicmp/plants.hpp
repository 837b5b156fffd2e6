#pragma once

#include "meicmp/integral_function.hpp"
#include "meicmp/linalg.hpp"
#include "meicmp/relations.hpp"

#include <functional>
#include <optional>
#include <string>

namespace meicmp {

/// Node dynamics. The input actually applied to the vector field is u + z,
/// where z is the leader offset (zero for followers).
///
///   Linear            x' = A x + B u + w,                 y = C x + T u
///   ConvexGradient    x' = -grad psi(x) + J x + B u + w,  y = C x + T u
///   DampedOscillator  q' = M p, p' = -M^T q - grad psi(p) + B u + w,  y = q
///   Custom            x' = f(x, u),                       y = h(x, u)
struct AgentModel {
  enum class Kind { Linear, ConvexGradient, DampedOscillator, Custom };

  Kind kind = Kind::Linear;
  int io_dim = 0;
  Mat A, B, C, T;
  Mat J;
  Mat M;
  std::optional<IntegralFunction> psi;
  Vec w;
  Vec z;

  std::function<Vec(const Vec&, const Vec&)> f;
  std::function<Vec(const Vec&, const Vec&)> h;
  int custom_state_dim = 0;
  bool custom_feedthrough = true;
  std::optional<VectorRelation> custom_relation;

  int state_dim() const;
  /// Output depends instantaneously on the input.
  bool has_feedthrough() const;
  bool is_leader() const { return z.size() > 0 && !z.isZero(0.0); }
};

AgentModel make_linear_agent(Mat A, Mat B, Mat C, Mat T, Vec w = Vec());
AgentModel make_convex_gradient_agent(IntegralFunction psi, Mat J, Mat B, Mat C, Mat T = Mat(), Vec w = Vec());
AgentModel make_damped_oscillator(Mat M, IntegralFunction psi, Mat B, Vec w = Vec());
/// q' = Omega p, p' = -D p - Omega^T (q - xbar) + Omega^{-1} u.
AgentModel make_forced_oscillator(const Mat& Omega, const Mat& D, const Vec& xbar);
AgentModel make_custom_agent(int state_dim, int io_dim, std::function<Vec(const Vec&, const Vec&)> f,
                             std::function<Vec(const Vec&, const Vec&)> h, std::optional<VectorRelation> relation,
                             bool feedthrough = true);
AgentModel with_leader_offset(AgentModel agent, Vec z);

struct Verdict {
  enum class Kind { Yes, YesStrict, No };
  Kind kind = Kind::No;
  std::string reason;
  bool yes() const { return kind != Kind::No; }
};

std::string to_string(Verdict::Kind k);

/// Affine relation y = (-C A^{-1} B + T) u - C A^{-1} w.
VectorRelation linear_ss_relation(const Mat& A, const Mat& B, const Mat& C, const Mat& T, const Vec& w = Vec());
/// Yes iff A is Hurwitz and -C A^{-1} B + T is symmetric positive definite.
Verdict is_meicmp_linear(const Mat& A, const Mat& B, const Mat& C, const Mat& T, double tol);

/// Affine relation y = M^{-T} B u + M^{-T}(w - grad psi(0)).
VectorRelation oscillator_ss_relation(const Mat& M, const Mat& B, const IntegralFunction& psi, const Vec& w = Vec());
/// YesStrict when M^{-T} B is symmetric PD, Yes when PSD, No otherwise.
Verdict is_meicmp_oscillator(const Mat& M, const Mat& B, double tol);

struct EquilibriumResult {
  Vec x0;
  double residual = 0.0;
  double ball_radius = 0.0;
  int iterations = 0;
};

/// Solves grad psi(x) - J x = B (u + z) + w for a convex-gradient agent.
EquilibriumResult solve_equilibrium(const AgentModel& model, const Vec& u, double tol = 1e-10, int max_iter = 200);

/// Steady-state relation of any built-in kind, including the leader shift.
VectorRelation agent_ss_relation(const AgentModel& model);

/// Equilibrium state for a constant input, for every kind with a known state map.
Vec agent_equilibrium_state(const AgentModel& model, const Vec& u);

Vec rhs(const AgentModel& model, const Vec& x, const Vec& u);
Vec output(const AgentModel& model, const Vec& x, const Vec& u);

}  // namespace meicmp
