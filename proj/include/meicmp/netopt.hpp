#pragma once

#include "meicmp/couplers.hpp"
#include "meicmp/integral_function.hpp"
#include "meicmp/minimize.hpp"
#include "meicmp/netgraph.hpp"
#include "meicmp/plants.hpp"
#include "meicmp/relations.hpp"

#include <optional>
#include <string>
#include <vector>

namespace meicmp {

/// The dual pair
///   OPP: minimize K*(y) + Gamma(E^T y)
///   OFP: minimize K(u) + Gamma*(mu)  subject to  u = -E mu
/// together with the per-node and per-edge relations they come from.
struct NetworkProblem {
  IncidenceOperator op;
  std::vector<VectorRelation> node_relations;
  std::vector<VectorRelation> edge_relations;

  // Per-block integral functions; absent when some relation has no closed form.
  std::vector<IntegralFunction> node_K, node_Kstar, edge_Gamma, edge_Gammastar;

  bool has_integrals() const {
    return !node_K.empty() && static_cast<int>(node_K.size()) == n() && static_cast<int>(edge_Gamma.size()) == m();
  }
  int n() const { return op.node_count(); }
  int m() const { return op.edge_count(); }
  int d() const { return op.dim(); }

  IntegralFunction K() const;
  IntegralFunction Kstar() const;
  IntegralFunction Gamma() const;
  IntegralFunction Gammastar() const;

  /// Set-valued evaluations of the stacked relations.
  SetDescriptor k_inverse(const Vec& y) const;
  SetDescriptor gamma(const Vec& zeta) const;
};

NetworkProblem assemble(const DirectedGraph& graph, const std::vector<AgentModel>& agents,
                        const std::vector<ControllerModel>& controllers);
NetworkProblem assemble_relations(const IncidenceOperator& op, std::vector<VectorRelation> node_relations,
                                  std::vector<VectorRelation> edge_relations);

struct SolverOptions {
  /// Fixed step for the smooth part; 0 chooses 1/L for quadratics and
  /// backtracking otherwise.
  double step = 0.0;
  int max_iter = 200000;
  double tol = 1e-9;
};

struct OppSolution {
  Vec y;
  Vec zeta;
  bool anchored = false;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
  std::vector<TraceRow> trace;
};

struct OfpSolution {
  Vec u;
  Vec mu;
  bool anchored = false;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
  std::vector<TraceRow> trace;
};

OppSolution solve_opp(const NetworkProblem& problem, const Vec& init_y, const SolverOptions& opts = {});
OfpSolution solve_ofp(const NetworkProblem& problem, const Vec& init_mu, const SolverOptions& opts = {});

struct SteadyStateCertificate {
  Vec u, y, zeta, mu;
  double residual_consistency = 0.0;
  double residual_relations = 0.0;
  double residual_inclusion = 0.0;
  /// True when u or mu had to be picked from a set with more than one element.
  bool selection_made = false;

  double max_residual() const;
  bool valid(double tol) const { return max_residual() <= tol; }
};

/// Minimum-norm (u, mu) with u in k^{-1}(y), mu in gamma(zeta), u = -E mu
/// (in the least-squares sense).
SteadyStateCertificate recover_certificate(const NetworkProblem& problem, const Vec& y, const Vec& zeta);

/// Norm of the minimum-norm element of k^{-1}(y) + E gamma(E^T y); +inf if empty.
double inclusion_residual(const NetworkProblem& problem, const Vec& y);

struct Candidate {
  Vec u, y, zeta, mu;
};

struct VerifyReport {
  bool valid = false;
  double zeta_consistency = 0.0;  // |zeta - E^T y|
  double u_consistency = 0.0;     // |u + E mu|
  double node_relation = 0.0;     // distance of (u, y) to the agent relations
  double edge_relation = 0.0;     // distance of (zeta, mu) to the controller relations
  double inclusion = 0.0;         // y-inclusion residual
  std::string failed;             // comma-separated names of violated conditions
};

VerifyReport verify_steady_state(const NetworkProblem& problem, const Candidate& candidate, double tol);

/// K(u) + Gamma*(mu) + K*(y) + Gamma(zeta). Throws InfiniteValue outside the domains.
double duality_gap(const NetworkProblem& problem, const Vec& u, const Vec& mu, const Vec& y, const Vec& zeta);

/// Solve the OPP and recover the certificate in one go.
SteadyStateCertificate predict_steady_state(const NetworkProblem& problem, const SolverOptions& opts = {},
                                            OppSolution* solution = nullptr);

}  // namespace meicmp
