#include "meicmp/synthesis.hpp"

#include "meicmp/error.hpp"

#include <cmath>
#include <random>

namespace meicmp {

std::string to_string(SynthesisMode m) { return m == SynthesisMode::Relative ? "relative" : "absolute"; }
std::string to_string(SynthesisStrategy s) { return s == SynthesisStrategy::Linear ? "linear" : "reconfigure"; }

namespace {

std::vector<SetDescriptor> node_inverses(const NetworkProblem& p, const Vec& y) {
  require(y.size() == p.op.node_space(), ErrorCode::DimensionMismatch, "target output has wrong length");
  std::vector<SetDescriptor> out;
  for (int i = 0; i < p.n(); ++i) {
    out.push_back(p.node_relations[i].inverse(y.segment(i * p.d(), p.d())));
    require(!out.back().is_empty(), ErrorCode::EmptyInverse,
            "target output of node " + std::to_string(i) + " is outside the range of its relation");
  }
  return out;
}

SetDescriptor set_sum(const std::vector<SetDescriptor>& parts) {
  SetDescriptor s = parts.front();
  for (size_t i = 1; i < parts.size(); ++i) s = minkowski_sum(s, parts[i]);
  return s;
}

// Min-norm element of sum_i k_i^{-1}(y*_i + beta); +inf entries when some set is empty.
Vec shifted_sum(const NetworkProblem& p, const Vec& y_star, const Vec& beta) {
  const Vec y = y_star + agreement_vector(beta, p.n());
  std::vector<SetDescriptor> parts;
  for (int i = 0; i < p.n(); ++i) {
    parts.push_back(p.node_relations[i].inverse(y.segment(i * p.d(), p.d())));
    if (parts.back().is_empty()) return Vec::Constant(p.d(), kInf);
  }
  return set_sum(parts).basepoint();
}

// Strict midpoint convexity with margin eps along random directions at radius r.
bool probe_strict(const std::function<double(const Vec&)>& f, const Vec& x, std::mt19937_64& rng) {
  constexpr double r = 1e-2;
  constexpr double eps = 1e-6;
  std::normal_distribution<double> g(0.0, 1.0);
  const double fx = f(x);
  if (!std::isfinite(fx)) return false;
  for (int k = 0; k < 32; ++k) {
    Vec v(x.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
    v.normalize();
    const double fp = f(x + r * v);
    const double fm = f(x - r * v);
    if (!(std::isfinite(fp) && std::isfinite(fm))) return false;
    if (!(fx <= 0.5 * (fp + fm) - eps)) return false;
  }
  return true;
}

}  // namespace

ForcibilityReport check_forcible(const NetworkProblem& p, const Vec& y_star, double tol) {
  const auto parts = node_inverses(p, y_star);
  const SetDescriptor sum = set_sum(parts);
  ForcibilityReport rep;
  rep.min_norm_sum = sum.basepoint();
  rep.residual = rep.min_norm_sum.norm();
  rep.forcible = rep.residual <= tol;

  // Witness: u_i = a_i + U_i s_i with sum_i u_i as close to 0 as possible, then min-norm.
  const int d = p.d();
  Eigen::Index cols = 0;
  for (const auto& s : parts) cols += s.basis().cols();
  Vec a(p.op.node_space());
  Mat U = Mat::Zero(p.op.node_space(), cols);
  Mat M = Mat::Zero(d, cols);
  Vec asum = Vec::Zero(d);
  Eigen::Index at = 0;
  for (int i = 0; i < p.n(); ++i) {
    const auto& s = parts[i];
    a.segment(i * d, d) = s.basepoint();
    asum += s.basepoint();
    const Eigen::Index k = s.basis().cols();
    U.block(i * d, at, d, k) = s.basis();
    M.middleCols(at, k) = s.basis();
    at += k;
  }
  if (cols == 0) {
    rep.witness = a;
  } else {
    const ConstrainedLs ls = constrained_least_squares(M, -asum, U, a);
    rep.witness = a + U * ls.w;
  }
  return rep;
}

UniquenessReport check_uniqueness_conditions(const NetworkProblem& p, const Vec& y_star, double tol,
                                             std::uint64_t seed) {
  UniquenessReport rep;
  try {
    rep.stationary = check_forcible(p, y_star, tol).forcible;
  } catch (const Error& e) {
    rep.note = e.what();
    return rep;
  }
  if (!p.has_integrals()) {
    rep.note = "integral functions unavailable; strict convexity not probed";
    return rep;
  }
  std::mt19937_64 rng(seed);
  const Vec zeta = p.op.tensions(y_star);
  const int d = p.d();
  rep.outer_strict = true;
  for (int e = 0; e < p.m() && rep.outer_strict; ++e) {
    const IntegralFunction& G = p.edge_Gamma[e];
    rep.outer_strict = probe_strict([&](const Vec& x) { return G.value(x); }, zeta.segment(e * d, d), rng);
  }
  auto A = [&](const Vec& beta) {
    double s = 0.0;
    for (int i = 0; i < p.n(); ++i) s += p.node_Kstar[i].value(y_star.segment(i * d, d) + beta);
    return s;
  };
  rep.inner_strict = probe_strict(A, Vec::Zero(d), rng);
  return rep;
}

Vec forcible_agreement_shift(const NetworkProblem& p, const Vec& y_star, double tol) {
  const int d = p.d();
  Vec beta = Vec::Zero(d);
  Vec F = shifted_sum(p, y_star, beta);
  require(F.allFinite(), ErrorCode::EmptyInverse, "target output is outside the range of the agent relations");
  for (int it = 0; it < 100 && F.norm() > tol; ++it) {
    Mat Jf(d, d);
    const double h = 1e-6 * (1.0 + beta.norm());
    for (int k = 0; k < d; ++k) {
      Vec e = Vec::Zero(d);
      e(k) = h;
      Jf.col(k) = (shifted_sum(p, y_star, beta + e) - shifted_sum(p, y_star, beta - e)) / (2.0 * h);
    }
    Vec step = Jf.completeOrthogonalDecomposition().solve(-F);
    if (!step.allFinite()) break;
    double t = 1.0;
    Vec Fn = shifted_sum(p, y_star, beta + step);
    while (!(Fn.allFinite() && Fn.norm() < F.norm()) && t > 1e-10) {
      t *= 0.5;
      Fn = shifted_sum(p, y_star, beta + t * step);
    }
    if (t <= 1e-10) break;
    beta += t * step;
    F = Fn;
  }
  require(F.norm() <= tol, ErrorCode::NotForcible, "no agreement translate of the target is forcible");
  return beta;
}

SynthesisResult synthesize_linear(const NetworkProblem& p, const Vec& y_star, SynthesisMode mode, double tol) {
  SynthesisResult res;
  res.zeta_star = p.op.tensions(y_star);
  res.report.forcibility = check_forcible(p, y_star, tol);
  res.report.mode_used = mode;
  Vec y_target = y_star;
  ForcibilityReport fr = res.report.forcibility;
  if (!fr.forcible) {
    if (mode == SynthesisMode::Absolute)
      fail(ErrorCode::NotForcible, "target output is not forcible (residual " + std::to_string(fr.residual) + ")");
    // Relative outputs only: force the agreement translate that is forcible.
    const Vec beta = forcible_agreement_shift(p, y_star, tol);
    y_target = y_star + agreement_vector(beta, p.n());
    fr = check_forcible(p, y_target, tol);
    res.report.warnings.push_back("target not forcible; forcing its agreement translate (relative outputs only)");
  }
  res.y_target = y_target;
  res.u_witness = fr.witness;
  require(in_cut_space(p.op, fr.witness, 10.0 * tol), ErrorCode::NotForcible, "witness input is not in the cut space");
  const Mat negE = -p.op.lifted();
  res.xi = pinv_solve(negE, fr.witness);
  require((negE * res.xi - fr.witness).norm() <= 10.0 * tol * (1.0 + fr.witness.norm()),
          ErrorCode::LeastSquaresFailure, "could not solve -E xi = u");
  // Controller eta' = -eta + zeta - o settles at mu = zeta* - o = xi.
  const int d = p.d();
  for (int e = 0; e < p.m(); ++e)
    res.controllers.push_back(make_linear_synthesis(res.zeta_star.segment(e * d, d) - res.xi.segment(e * d, d)));

  std::vector<VectorRelation> edges;
  for (const auto& c : res.controllers) edges.push_back(controller_ss_relation(c));
  const NetworkProblem synthesized = assemble_relations(p.op, p.node_relations, edges);
  res.report.uniqueness = check_uniqueness_conditions(synthesized, y_target, tol);
  if (mode == SynthesisMode::Absolute && !res.report.uniqueness.inner_strict) {
    res.report.mode_used = SynthesisMode::Relative;
    res.report.warnings.push_back("inner strict convexity probe failed; only relative outputs are guaranteed");
  }
  return res;
}

Vec g_map(const NetworkProblem& p, const Vec& y, double tol) {
  const SetDescriptor kin = p.k_inverse(y);
  require(!kin.is_empty(), ErrorCode::NotForcible, "output is outside the range of the agent relations");
  const Mat& E = p.op.lifted();
  const Mat& U = kin.basis();
  const Vec& a = kin.basepoint();
  const Eigen::Index md = E.cols();
  // Unknowns (mu, s): -E mu - U s = a, minimizing |mu|.
  Mat M(E.rows(), md + U.cols());
  M << -E, -U;
  Mat G = Mat::Zero(md, md + U.cols());
  G.leftCols(md).setIdentity();
  const ConstrainedLs ls = constrained_least_squares(M, a, G, Vec::Zero(md));
  require(ls.constraint_residual <= tol * (1.0 + a.norm()), ErrorCode::NotForcible,
          "output is not forcible: no flow realizes an admissible input");
  return ls.w.head(md);
}

std::pair<Vec, Vec> reconfiguration_offsets(const NetworkProblem& base, const Vec& y0, const NetworkProblem& target,
                                            const Vec& y_star, double tol) {
  const Vec alpha = base.op.tensions(y_star - y0);
  const Vec beta = g_map(target, y_star, tol) - g_map(base, y0, tol);
  return {alpha, beta};
}

std::pair<Vec, Vec> reconfiguration_offsets(const NetworkProblem& problem, const Vec& y0, const Vec& y_star,
                                            double tol) {
  return reconfiguration_offsets(problem, y0, problem, y_star, tol);
}

Vec leader_input(const NetworkProblem& p, const Vec& y_star, int i0, double tol) {
  (void)tol;
  require(i0 >= 0 && i0 < p.n(), ErrorCode::IndexOutOfRange, "leader index out of range");
  return set_sum(node_inverses(p, y_star)).basepoint();
}

NetworkProblem augment_with_leader(const NetworkProblem& p, int i0, const Vec& z) {
  require(i0 >= 0 && i0 < p.n(), ErrorCode::IndexOutOfRange, "leader index out of range");
  require(z.size() == p.d(), ErrorCode::DimensionMismatch, "leader input has wrong length");
  std::vector<VectorRelation> nodes = p.node_relations;
  nodes[i0] = VectorRelation::shifted(nodes[i0], -z, Vec::Zero(p.d()));
  return assemble_relations(p.op, std::move(nodes), p.edge_relations);
}

SynthesisResult synthesize(const NetworkProblem& problem, const std::vector<ControllerModel>& base_controllers,
                           const SynthesisSpec& spec, double tol, const SolverOptions& opts) {
  const Vec& y_star = spec.y_star;
  require(y_star.size() == problem.op.node_space(), ErrorCode::DimensionMismatch, "target output has wrong length");
  NetworkProblem target = problem;
  Vec z;
  const ForcibilityReport natural = check_forcible(problem, y_star, tol);
  if (spec.leader) {
    z = leader_input(problem, y_star, *spec.leader, tol);
    target = augment_with_leader(problem, *spec.leader, z);
  }

  if (spec.strategy == SynthesisStrategy::Linear) {
    SynthesisResult res = synthesize_linear(target, y_star, spec.mode, tol);
    res.report.forcibility = natural;
    if (spec.leader) {
      res.leader = *spec.leader;
      res.leader_z = z;
    }
    return res;
  }

  // Reconfiguration of the existing controllers around their current steady state.
  require(static_cast<int>(base_controllers.size()) == problem.m(), ErrorCode::DimensionMismatch,
          "one base controller per edge required");
  std::vector<VectorRelation> base_edges;
  for (const auto& c : base_controllers) base_edges.push_back(controller_ss_relation(c.base()));
  const NetworkProblem base = assemble_relations(problem.op, problem.node_relations, base_edges);
  const NetworkProblem target_base = assemble_relations(target.op, target.node_relations, base_edges);
  OppSolution s0;
  const SteadyStateCertificate c0 = predict_steady_state(base, opts, &s0);
  const Vec& y0 = c0.y;

  SynthesisResult res;
  res.report.forcibility = natural;
  res.report.mode_used = spec.mode;
  Vec y_target = y_star;
  const ForcibilityReport fr = check_forcible(target_base, y_star, tol);
  if (!fr.forcible) {
    if (spec.mode == SynthesisMode::Absolute)
      fail(ErrorCode::NotForcible, "target output is not forcible (residual " + std::to_string(fr.residual) + ")");
    const Vec beta = forcible_agreement_shift(target_base, y_star, tol);
    y_target = y_star + agreement_vector(beta, problem.n());
    res.report.warnings.push_back("target not forcible; forcing its agreement translate (relative outputs only)");
  }
  res.y_target = y_target;
  res.u_witness = check_forcible(target_base, y_target, tol).witness;
  res.zeta_star = problem.op.tensions(y_star);
  const auto [alpha, beta] = reconfiguration_offsets(base, y0, target_base, y_target, tol);
  res.alpha = alpha;
  res.beta = beta;
  res.xi = g_map(target_base, y_target, tol);
  const int d = problem.d();
  std::vector<VectorRelation> edges;
  for (int e = 0; e < problem.m(); ++e) {
    res.controllers.push_back(
        make_reconfigured(base_controllers[e].base(), alpha.segment(e * d, d), beta.segment(e * d, d)));
    edges.push_back(controller_ss_relation(res.controllers.back()));
  }
  const NetworkProblem synthesized = assemble_relations(target.op, target.node_relations, edges);
  res.report.uniqueness = check_uniqueness_conditions(synthesized, y_target, tol);
  if (spec.mode == SynthesisMode::Absolute && !res.report.uniqueness.inner_strict) {
    res.report.mode_used = SynthesisMode::Relative;
    res.report.warnings.push_back("inner strict convexity probe failed; only relative outputs are guaranteed");
  }
  if (spec.leader) {
    res.leader = *spec.leader;
    res.leader_z = z;
  }
  return res;
}

}  // namespace meicmp
