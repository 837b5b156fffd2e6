#include "meicmp/netopt.hpp"

#include "meicmp/error.hpp"

#include <cmath>
#include <sstream>

namespace meicmp {

// ---------------------------------------------------------------------------
// Problem assembly

IntegralFunction NetworkProblem::K() const { return IntegralFunction::block_stack(node_K); }
IntegralFunction NetworkProblem::Kstar() const { return IntegralFunction::block_stack(node_Kstar); }
// A network without edges has zero-dimensional edge functions.
IntegralFunction NetworkProblem::Gamma() const {
  return edge_Gamma.empty() ? IntegralFunction::zero(0) : IntegralFunction::block_stack(edge_Gamma);
}
IntegralFunction NetworkProblem::Gammastar() const {
  return edge_Gammastar.empty() ? IntegralFunction::zero(0) : IntegralFunction::block_stack(edge_Gammastar);
}

SetDescriptor NetworkProblem::k_inverse(const Vec& y) const {
  require(y.size() == op.node_space(), ErrorCode::DimensionMismatch, "node vector has wrong length");
  std::vector<SetDescriptor> parts;
  for (int i = 0; i < n(); ++i) parts.push_back(node_relations[i].inverse(y.segment(i * d(), d())));
  return cartesian(parts);
}

SetDescriptor NetworkProblem::gamma(const Vec& zeta) const {
  require(zeta.size() == op.edge_space(), ErrorCode::DimensionMismatch, "edge vector has wrong length");
  std::vector<SetDescriptor> parts;
  for (int e = 0; e < m(); ++e) parts.push_back(edge_relations[e].forward(zeta.segment(e * d(), d())));
  return cartesian(parts);
}

NetworkProblem assemble_relations(const IncidenceOperator& op, std::vector<VectorRelation> node_relations,
                                  std::vector<VectorRelation> edge_relations) {
  require(static_cast<int>(node_relations.size()) == op.node_count(), ErrorCode::DimensionMismatch,
          "one relation per node required");
  require(static_cast<int>(edge_relations.size()) == op.edge_count(), ErrorCode::DimensionMismatch,
          "one relation per edge required");
  for (const auto& r : node_relations)
    require(r.dim() == op.dim(), ErrorCode::DimensionMismatch, "node relation dimension differs from the network");
  for (const auto& r : edge_relations)
    require(r.dim() == op.dim(), ErrorCode::DimensionMismatch, "edge relation dimension differs from the network");
  NetworkProblem p{op, std::move(node_relations), std::move(edge_relations), {}, {}, {}, {}};
  bool all = true;
  for (const auto& r : p.node_relations) all = all && r.has_integrals();
  for (const auto& r : p.edge_relations) all = all && r.has_integrals();
  if (all) {
    for (const auto& r : p.node_relations) {
      const IntegralPair ip = r.integrals();
      p.node_K.push_back(ip.K);
      p.node_Kstar.push_back(ip.Kstar);
    }
    for (const auto& r : p.edge_relations) {
      const IntegralPair ip = r.integrals();
      p.edge_Gamma.push_back(ip.K);
      p.edge_Gammastar.push_back(ip.Kstar);
    }
  }
  return p;
}

NetworkProblem assemble(const DirectedGraph& graph, const std::vector<AgentModel>& agents,
                        const std::vector<ControllerModel>& controllers) {
  require(!agents.empty(), ErrorCode::EmptyList, "network without agents");
  const int d = agents.front().io_dim;
  for (const auto& a : agents) require(a.io_dim == d, ErrorCode::DimensionMismatch, "agents differ in io dimension");
  for (const auto& c : controllers)
    require(c.io_dim == d, ErrorCode::DimensionMismatch, "controller io dimension differs from the agents");
  require(static_cast<int>(agents.size()) == graph.node_count(), ErrorCode::DimensionMismatch,
          "one agent per node required");
  require(static_cast<int>(controllers.size()) == graph.edge_count(), ErrorCode::DimensionMismatch,
          "one controller per edge required");
  std::vector<VectorRelation> nodes;
  for (const auto& a : agents) nodes.push_back(agent_ss_relation(a));
  std::vector<VectorRelation> edges;
  for (const auto& c : controllers) edges.push_back(controller_ss_relation(c));
  return assemble_relations(incidence(graph, d), std::move(nodes), std::move(edges));
}

// ---------------------------------------------------------------------------
// Composite objectives  sum_t f_t(A_t x + o_t) + lin^T x + constant  s.t.  C x = h

namespace {

struct Term {
  IntegralFunction f;
  Mat A;
  Vec o;
};

struct Composite {
  int dim = 0;
  std::vector<Term> smooth;
  std::vector<Term> rough;
  std::vector<Mat> C;
  std::vector<Vec> h;
  Vec lin;
  double constant = 0.0;
};

void decompose(const IntegralFunction& f, const Mat& A, const Vec& o, Composite& out) {
  using K = IntegralFunction::Kind;
  switch (f.kind()) {
    case K::IndicatorZero:
      out.C.push_back(f.P().transpose() * A);
      out.h.push_back(-(f.P().transpose() * o));
      return;
    case K::Shifted:
      decompose(f.inner(), A, o - f.offset(), out);
      out.lin += A.transpose() * f.linear();
      out.constant += f.linear().dot(o) + f.constant();
      return;
    case K::Sum:
      for (const auto& c : f.children()) decompose(c, A, o, out);
      return;
    case K::BlockStack: {
      int at = 0;
      for (const auto& c : f.children()) {
        decompose(c, A.middleRows(at, c.dim()), o.segment(at, c.dim()), out);
        at += c.dim();
      }
      return;
    }
    default:
      (f.is_smooth() ? out.smooth : out.rough).push_back({f, A, o});
      return;
  }
}

struct Anchor {
  Vec direction;  // candidate free direction
  Vec row;        // anchoring constraint row^T x = rhs
  double rhs = 0.0;
};

struct CompositeSolution {
  Vec x;
  bool anchored = false;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
  std::vector<TraceRow> trace;
};

class CompositeSolver {
 public:
  explicit CompositeSolver(Composite c) : c_(std::move(c)) {}

  double value(const Vec& x) const {
    double v = c_.lin.dot(x) + c_.constant;
    for (const auto& t : c_.smooth) {
      v += t.f.value(t.A * x + t.o);
      if (!(v < kInf)) return kInf;
    }
    for (const auto& t : c_.rough) {
      v += t.f.value(t.A * x + t.o);
      if (!(v < kInf)) return kInf;
    }
    return v;
  }

  Vec gradient(const Vec& x) const {
    Vec g = c_.lin;
    for (const auto& t : c_.smooth) g += t.A.transpose() * t.f.gradient(t.A * x + t.o);
    for (const auto& t : c_.rough) g += t.A.transpose() * t.f.subgradient(t.A * x + t.o).basepoint();
    return g;
  }

  Mat hessian(const Vec& x) const {
    Mat H = Mat::Zero(c_.dim, c_.dim);
    for (const auto& t : c_.smooth) H += t.A.transpose() * t.f.hessian(t.A * x + t.o) * t.A;
    return H;
  }

  bool quadratic(Mat* H, Vec* g0) const {
    if (!c_.rough.empty()) return false;
    Mat Hs = Mat::Zero(c_.dim, c_.dim);
    Vec gs = c_.lin;
    for (const auto& t : c_.smooth) {
      Mat P;
      Vec q;
      double cc = 0.0;
      if (!t.f.as_quadratic(&P, &q, &cc)) return false;
      Hs += t.A.transpose() * P * t.A;
      gs += t.A.transpose() * (P * t.o + q);
    }
    *H = Hs;
    *g0 = gs;
    return true;
  }

  CompositeSolution solve(const Vec& init, const std::vector<Anchor>& candidates, const SolverOptions& opts) const {
    const int n = c_.dim;
    Mat C(0, n);
    Vec h(0);
    for (size_t i = 0; i < c_.C.size(); ++i) {
      C.conservativeResize(C.rows() + c_.C[i].rows(), n);
      C.bottomRows(c_.C[i].rows()) = c_.C[i];
      h.conservativeResize(h.size() + c_.h[i].size());
      h.tail(c_.h[i].size()) = c_.h[i];
    }
    auto affine_set = [&](const Mat& Cm, const Vec& hm, Vec* xp, Mat* N) {
      if (Cm.rows() == 0) {
        *xp = init;
        *N = Mat::Identity(n, n);
        return;
      }
      const Vec w0 = pinv_solve(Cm, hm);
      if ((Cm * w0 - hm).norm() > 1e-9 * (1.0 + hm.norm()))
        fail(ErrorCode::Infeasible, "indicator constraints of the objective are inconsistent");
      *N = null_space(Cm);
      *xp = w0 + *N * (N->transpose() * (init - w0));
    };
    Vec xp;
    Mat N;
    affine_set(C, h, &xp, &N);

    CompositeSolution sol;
    Vec x0 = xp;
    if (!(value(x0) < kInf)) {
      // Projected start outside the smooth domains: retry from the minimum-norm feasible point.
      Vec alt = C.rows() ? pinv_solve(C, h) : Vec::Zero(n);
      if (!(value(alt) < kInf)) fail(ErrorCode::Infeasible, "objective is +inf on the feasible set");
      x0 = alt;
    }

    // Anchor flat directions that stay inside the feasible set.
    const double f0 = value(x0);
    for (const auto& a : candidates) {
      if (C.rows() && (C * a.direction).norm() > 1e-9 * a.direction.norm()) continue;
      bool flat = true;
      for (double t : {-3.0, -1.0, 1.0, 3.0}) {
        const double ft = value(x0 + t * a.direction);
        if (!(std::abs(ft - f0) <= 1e-11 * (1.0 + std::abs(f0)))) {
          flat = false;
          break;
        }
      }
      if (!flat) continue;
      C.conservativeResize(C.rows() + 1, n);
      C.bottomRows(1) = a.row.transpose();
      h.conservativeResize(h.size() + 1);
      h(h.size() - 1) = a.rhs;
      sol.anchored = true;
    }
    if (sol.anchored) {
      affine_set(C, h, &xp, &N);
      x0 = value(xp) < kInf ? xp : Vec(pinv_solve(C, h));
      if (!(value(x0) < kInf)) fail(ErrorCode::Infeasible, "objective is +inf on the anchored feasible set");
    }
    const Vec base = x0;
    auto lift = [&](const Vec& z) -> Vec { return base + N * z; };
    const Eigen::Index r = N.cols();
    if (r == 0) {
      sol.x = base;
      sol.converged = true;
      sol.method = "fixed-by-constraints";
      return sol;
    }

    auto fz = [&](const Vec& z) { return value(lift(z)); };
    auto gz = [&](const Vec& z) -> Vec { return N.transpose() * gradient(lift(z)); };
    auto hz = [&](const Vec& z) -> Mat { return N.transpose() * hessian(lift(z)) * N; };
    auto ident = [](const Vec& z, double) { return z; };

    MinimizeOptions mo;
    mo.max_iter = opts.max_iter;
    mo.tol = opts.tol;
    mo.trace_every = 1;
    const Vec z0 = Vec::Zero(r);

    Mat H;
    Vec g0;
    MinimizeResult res;
    if (quadratic(&H, &g0)) {
      const Mat Hz = N.transpose() * H * N;
      const double L = max_symmetric_eigenvalue(0.5 * (Hz + Hz.transpose()));
      if (L <= 1e-14) {
        const double gn = (N.transpose() * (H * base + g0)).norm();
        if (gn > opts.tol) fail(ErrorCode::NoConvergence, "objective is linear and unbounded below");
        sol.x = base;
        sol.converged = true;
        sol.method = "constant";
        return sol;
      }
      mo.step = opts.step > 0.0 ? opts.step : 1.0 / L;
      res = proximal_gradient(fz, gz, nullptr, ident, z0, mo);
    } else if (c_.rough.empty()) {
      // Smooth but not quadratic: damped Newton usually finishes in a few
      // dozen steps; accelerated gradient is the fallback.
      MinimizeOptions no;
      no.max_iter = std::min(200, opts.max_iter);
      no.tol = opts.tol;
      no.trace_every = 1;
      try {
        MinimizeResult nr = newton_minimize(fz, gz, hz, z0, no);
        const double nres = gz(nr.x).norm();
        if (nres <= opts.tol) {
          sol.x = lift(nr.x);
          sol.residual = nres;
          sol.converged = true;
          sol.iterations = nr.iterations;
          sol.method = nr.method;
          sol.trace = std::move(nr.trace);
          return sol;
        }
      } catch (const Error&) {
        // fall through to the first-order method
      }
      mo.step = opts.step;
      res = proximal_gradient(fz, gz, nullptr, ident, z0, mo);
    } else {
      const double c = 0.1 * (1.0 + base.norm());
      res = subgradient_method(fz, gz, [](const Vec& z) { return z; }, z0, c, mo);
      sol.x = lift(res.x);
      sol.converged = res.converged;
      sol.residual = res.residual;
      sol.iterations = res.iterations;
      sol.method = res.method;
      sol.trace = std::move(res.trace);
      return sol;
    }
    sol.method = res.method;
    sol.trace = std::move(res.trace);
    sol.iterations = res.iterations;
    Vec z = res.x;
    double resid = gz(z).norm();
    // Newton refinement on the smooth reduced problem.
    if (resid > 0.01 * opts.tol) {
      MinimizeOptions no;
      no.max_iter = std::min(100, opts.max_iter);
      no.tol = 0.01 * opts.tol;
      no.trace_every = 0;
      try {
        MinimizeResult nr = newton_minimize(fz, gz, hz, z, no);
        const double nres = gz(nr.x).norm();
        if (nres < resid && nr.objective <= res.objective + 1e-12 * (1.0 + std::abs(res.objective))) {
          z = nr.x;
          resid = nres;
          sol.method += "+newton";
          sol.iterations += nr.iterations;
          sol.trace.push_back({sol.iterations, nr.objective, nres});
        }
      } catch (const Error&) {
        // keep the first-order iterate
      }
    }
    sol.x = lift(z);
    sol.residual = resid;
    sol.converged = resid <= opts.tol;
    if (!sol.converged) fail(ErrorCode::NoConvergence, "optimizer stopped with residual above tolerance");
    return sol;
  }

 private:
  Composite c_;
};

Composite opp_composite(const NetworkProblem& p) {
  const int nd = p.op.node_space();
  const int d = p.d();
  Composite c;
  c.dim = nd;
  c.lin = Vec::Zero(nd);
  for (int i = 0; i < p.n(); ++i) {
    Mat sel = Mat::Zero(d, nd);
    sel.middleCols(i * d, d).setIdentity();
    decompose(p.node_Kstar[i], sel, Vec::Zero(d), c);
  }
  const Mat Et = p.op.lifted().transpose();
  for (int e = 0; e < p.m(); ++e) decompose(p.edge_Gamma[e], Et.middleRows(e * d, d), Vec::Zero(d), c);
  return c;
}

Composite ofp_composite(const NetworkProblem& p) {
  const int md = p.op.edge_space();
  const int d = p.d();
  Composite c;
  c.dim = md;
  c.lin = Vec::Zero(md);
  const Mat& E = p.op.lifted();
  for (int i = 0; i < p.n(); ++i) decompose(p.node_K[i], -E.middleRows(i * d, d), Vec::Zero(d), c);
  for (int e = 0; e < p.m(); ++e) {
    Mat sel = Mat::Zero(d, md);
    sel.middleCols(e * d, d).setIdentity();
    decompose(p.edge_Gammastar[e], sel, Vec::Zero(d), c);
  }
  return c;
}

void require_integrals(const NetworkProblem& p) {
  require(p.has_integrals(), ErrorCode::UnsupportedKind,
          "some relation has no closed-form integral function; the optimization problems are unavailable");
}

}  // namespace

OppSolution solve_opp(const NetworkProblem& problem, const Vec& init_y, const SolverOptions& opts) {
  require_integrals(problem);
  const int nd = problem.op.node_space();
  const Vec init = init_y.size() == 0 ? Vec::Zero(nd) : init_y;
  require(init.size() == nd, ErrorCode::DimensionMismatch, "initial potential has wrong length");
  std::vector<Anchor> anchors;
  const int d = problem.d();
  for (int k = 0; k < d; ++k) {
    Vec e = Vec::Zero(d);
    e(k) = 1.0;
    Anchor a;
    a.direction = agreement_vector(e, problem.n());
    a.row = Vec::Zero(nd);
    a.row(k) = 1.0;
    a.rhs = init(k);
    anchors.push_back(a);
  }
  const CompositeSolution cs = CompositeSolver(opp_composite(problem)).solve(init, anchors, opts);
  OppSolution s;
  s.y = cs.x;
  s.zeta = problem.op.tensions(cs.x);
  s.anchored = cs.anchored;
  s.converged = cs.converged;
  s.residual = cs.residual;
  s.iterations = cs.iterations;
  s.method = cs.method;
  s.trace = cs.trace;
  return s;
}

OfpSolution solve_ofp(const NetworkProblem& problem, const Vec& init_mu, const SolverOptions& opts) {
  require_integrals(problem);
  const int md = problem.op.edge_space();
  const Vec init = init_mu.size() == 0 ? Vec::Zero(md) : init_mu;
  require(init.size() == md, ErrorCode::DimensionMismatch, "initial flow has wrong length");
  // Flows along cycles do not change u; anchor them at their initial component.
  std::vector<Anchor> anchors;
  const Mat cycles = null_space(problem.op.lifted());
  for (Eigen::Index j = 0; j < cycles.cols(); ++j) {
    Anchor a;
    a.direction = cycles.col(j);
    a.row = cycles.col(j);
    a.rhs = cycles.col(j).dot(init);
    anchors.push_back(a);
  }
  const CompositeSolution cs = CompositeSolver(ofp_composite(problem)).solve(init, anchors, opts);
  OfpSolution s;
  s.mu = cs.x;
  s.u = -problem.op.apply(cs.x);
  s.anchored = cs.anchored;
  s.converged = cs.converged;
  s.residual = cs.residual;
  s.iterations = cs.iterations;
  s.method = cs.method;
  s.trace = cs.trace;
  return s;
}

// ---------------------------------------------------------------------------
// Certificates

double SteadyStateCertificate::max_residual() const {
  return std::max({residual_consistency, residual_relations, residual_inclusion});
}

namespace {

// Distance of a pair to a relation, measured on whichever side is evaluable.
double pair_distance(const VectorRelation& rel, const Vec& in, const Vec& out) {
  double best = kInf;
  try {
    best = std::min(best, rel.inverse(out).distance(in));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RelationNotEvaluable) throw;
  }
  try {
    best = std::min(best, rel.forward(in).distance(out));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RelationNotEvaluable) throw;
  }
  return best;
}

double node_relation_residual(const NetworkProblem& p, const Vec& u, const Vec& y) {
  double s = 0.0;
  for (int i = 0; i < p.n(); ++i) {
    const double di = pair_distance(p.node_relations[i], u.segment(i * p.d(), p.d()), y.segment(i * p.d(), p.d()));
    s += di * di;
  }
  return std::sqrt(s);
}

double edge_relation_residual(const NetworkProblem& p, const Vec& zeta, const Vec& mu) {
  double s = 0.0;
  for (int e = 0; e < p.m(); ++e) {
    const double de =
        pair_distance(p.edge_relations[e], zeta.segment(e * p.d(), p.d()), mu.segment(e * p.d(), p.d()));
    s += de * de;
  }
  return std::sqrt(s);
}

}  // namespace

double inclusion_residual(const NetworkProblem& p, const Vec& y) {
  const SetDescriptor kin = p.k_inverse(y);
  if (kin.is_empty()) return kInf;
  const SetDescriptor g = p.gamma(p.op.tensions(y));
  if (g.is_empty()) return kInf;
  return minkowski_sum(kin, g.linear_image(p.op.lifted())).basepoint().norm();
}

SteadyStateCertificate recover_certificate(const NetworkProblem& p, const Vec& y, const Vec& zeta) {
  const SetDescriptor kin = p.k_inverse(y);
  const SetDescriptor g = p.gamma(zeta);
  require(!kin.is_empty(), ErrorCode::EmptySelection, "potential y is outside the range of the agent relations");
  require(!g.is_empty(), ErrorCode::EmptySelection, "tension zeta is outside the domain of the controller relations");
  const Mat& E = p.op.lifted();
  const Vec& a = kin.basepoint();
  const Vec& b = g.basepoint();
  const Mat& U = kin.basis();
  const Mat& V = g.basis();

  SteadyStateCertificate cert;
  cert.y = y;
  cert.zeta = zeta;
  const Eigen::Index nu = U.cols();
  const Eigen::Index nv = V.cols();
  if (nu + nv == 0) {
    cert.u = a;
    cert.mu = b;
  } else {
    cert.selection_made = true;
    Mat M(E.rows(), nu + nv);
    M << U, E * V;
    Mat G = Mat::Zero(a.size() + b.size(), nu + nv);
    G.topLeftCorner(a.size(), nu) = U;
    G.bottomRightCorner(b.size(), nv) = V;
    Vec h(a.size() + b.size());
    h << a, b;
    const ConstrainedLs ls = constrained_least_squares(M, -(a + E * b), G, h);
    cert.u = a + U * ls.w.head(nu);
    cert.mu = b + V * ls.w.tail(nv);
  }
  cert.residual_consistency = std::max((zeta - p.op.tensions(y)).norm(), (cert.u + E * cert.mu).norm());
  cert.residual_relations =
      std::max(node_relation_residual(p, cert.u, y), edge_relation_residual(p, zeta, cert.mu));
  cert.residual_inclusion = inclusion_residual(p, y);
  return cert;
}

VerifyReport verify_steady_state(const NetworkProblem& p, const Candidate& c, double tol) {
  VerifyReport r;
  const bool dims = c.u.size() == p.op.node_space() && c.y.size() == p.op.node_space() &&
                    c.zeta.size() == p.op.edge_space() && c.mu.size() == p.op.edge_space();
  if (!dims) {
    r.zeta_consistency = r.u_consistency = r.node_relation = r.edge_relation = r.inclusion = kInf;
    r.failed = "dimensions";
    return r;
  }
  r.zeta_consistency = (c.zeta - p.op.tensions(c.y)).norm();
  r.u_consistency = (c.u + p.op.apply(c.mu)).norm();
  r.node_relation = node_relation_residual(p, c.u, c.y);
  r.edge_relation = edge_relation_residual(p, c.zeta, c.mu);
  r.inclusion = inclusion_residual(p, c.y);
  std::ostringstream failed;
  auto check = [&](double v, const char* name) {
    if (!(v <= tol)) failed << (failed.tellp() > 0 ? "," : "") << name;
  };
  check(r.zeta_consistency, "zeta-consistency");
  check(r.u_consistency, "u-consistency");
  check(r.node_relation, "node-relation");
  check(r.edge_relation, "edge-relation");
  check(r.inclusion, "inclusion");
  r.failed = failed.str();
  r.valid = r.failed.empty();
  return r;
}

double duality_gap(const NetworkProblem& p, const Vec& u, const Vec& mu, const Vec& y, const Vec& zeta) {
  require_integrals(p);
  const double terms[] = {p.K().value(u), p.Gammastar().value(mu), p.Kstar().value(y), p.Gamma().value(zeta)};
  const char* names[] = {"K(u)", "Gamma*(mu)", "K*(y)", "Gamma(zeta)"};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    require(std::isfinite(terms[i]), ErrorCode::InfiniteValue, std::string(names[i]) + " is infinite");
    s += terms[i];
  }
  return s;
}

SteadyStateCertificate predict_steady_state(const NetworkProblem& problem, const SolverOptions& opts,
                                            OppSolution* solution) {
  OppSolution s = solve_opp(problem, Vec(), opts);
  SteadyStateCertificate cert = recover_certificate(problem, s.y, s.zeta);
  if (solution) *solution = std::move(s);
  return cert;
}

}  // namespace meicmp
