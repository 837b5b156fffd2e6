#pragma once

#include "meicmp/couplers.hpp"
#include "meicmp/netgraph.hpp"
#include "meicmp/netopt.hpp"
#include "meicmp/ode.hpp"
#include "meicmp/plants.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace meicmp {

/// The network (Sigma, Pi, G) wired as zeta = E^T y, u = -E mu. The full
/// state stacks all agent states, then all controller states.
class ClosedLoopSystem {
 public:
  ClosedLoopSystem(const DirectedGraph& graph, std::vector<AgentModel> agents, std::vector<ControllerModel> controllers);

  const IncidenceOperator& op() const { return op_; }
  const std::vector<AgentModel>& agents() const { return agents_; }
  const std::vector<ControllerModel>& controllers() const { return controllers_; }

  int state_dim() const { return total_; }
  int agent_offset(int i) const { return agent_off_[i]; }
  int controller_offset(int e) const { return ctrl_off_[e]; }

  /// Agent states at zero, controller states at their declared initial values.
  Vec default_initial_state() const;

  struct Signals {
    Vec u, y, zeta, mu;
  };
  Signals signals(const Vec& state) const;

  /// Same wiring and state layout, different controllers (e.g. after reconfiguration).
  ClosedLoopSystem with_controllers(std::vector<ControllerModel> controllers) const;
  ClosedLoopSystem with_agents(std::vector<AgentModel> agents) const;

 private:
  IncidenceOperator op_;
  std::vector<AgentModel> agents_;
  std::vector<ControllerModel> controllers_;
  std::vector<int> agent_off_;
  std::vector<int> ctrl_off_;
  int total_ = 0;
  bool controllers_first_ = true;
};

Vec step_rhs(const ClosedLoopSystem& sys, const Vec& state);

struct SimOptions {
  OdeMethod method = OdeMethod::RK45;
  double dt = 1e-3;
  double tol = 1e-8;
  double record_every = 0.01;
  double max_step = 0.0;
  std::uint64_t seed = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<ClosedLoopSystem::Signals> signals;
  std::string method;
  double dt = 0.0;
  double tol = 0.0;
  std::uint64_t seed = 0;

  void append(const Trajectory& other);
  /// CSV with header t, y[i.k]..., u[i.k]..., zeta[e.k]..., mu[e.k]...
  std::string to_csv(int node_count, int edge_count, int d) const;
};

Trajectory integrate(const ClosedLoopSystem& sys, const Vec& init, double T, const SimOptions& opts, double t0 = 0.0);

struct ConvergenceResult {
  bool converged = false;
  Vec y_ss;
  Vec mu_ss;
  double t_conv = 0.0;
  double variation = 0.0;
};

/// Converged when the max variation of (y, mu) over the trailing window
/// is at most tol; y_ss and mu_ss are window means.
ConvergenceResult detect_convergence(const Trajectory& traj, double window, double tol);

struct ComparisonReport {
  double y_error = 0.0;
  double mu_error = 0.0;
  bool pass = false;
  bool aligned = false;
};

/// Compare the converged end of a trajectory with a certificate. With
/// align_dim = d > 0, the agreement component of the y difference (blockwise
/// mean over nodes) is removed first.
ComparisonReport compare_prediction(const Trajectory& traj, const SteadyStateCertificate& cert, double tol,
                                    int align_dim = 0, double window = -1.0, double conv_tol = 1e-6);

/// Runs fn(0..count-1) on up to `jobs` threads. Exceptions propagate.
void run_parallel(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace meicmp
