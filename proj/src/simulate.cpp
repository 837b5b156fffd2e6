#include "meicmp/simulate.hpp"

#include "meicmp/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace meicmp {

ClosedLoopSystem::ClosedLoopSystem(const DirectedGraph& graph, std::vector<AgentModel> agents,
                                   std::vector<ControllerModel> controllers)
    : op_(graph, agents.empty() ? 1 : agents.front().io_dim),
      agents_(std::move(agents)),
      controllers_(std::move(controllers)) {
  require(static_cast<int>(agents_.size()) == graph.node_count(), ErrorCode::DimensionMismatch,
          "one agent per node required");
  require(static_cast<int>(controllers_.size()) == graph.edge_count(), ErrorCode::DimensionMismatch,
          "one controller per edge required");
  const int d = op_.dim();
  bool agent_ft = false;
  bool ctrl_ft = false;
  for (const auto& a : agents_) {
    require(a.io_dim == d, ErrorCode::DimensionMismatch, "agents differ in io dimension");
    agent_off_.push_back(total_);
    total_ += a.state_dim();
    agent_ft = agent_ft || a.has_feedthrough();
  }
  for (const auto& c : controllers_) {
    require(c.io_dim == d, ErrorCode::DimensionMismatch, "controller io dimension differs from the agents");
    ctrl_off_.push_back(total_);
    total_ += c.state_dim();
    ctrl_ft = ctrl_ft || c.has_feedthrough();
  }
  if (agent_ft && ctrl_ft)
    fail(ErrorCode::AlgebraicLoop, "agents and controllers both have direct feedthrough");
  controllers_first_ = !ctrl_ft;
}

ClosedLoopSystem ClosedLoopSystem::with_controllers(std::vector<ControllerModel> controllers) const {
  ClosedLoopSystem s(op_.graph(), agents_, std::move(controllers));
  require(s.state_dim() == state_dim(), ErrorCode::DimensionMismatch, "replacement controllers change the state layout");
  return s;
}

ClosedLoopSystem ClosedLoopSystem::with_agents(std::vector<AgentModel> agents) const {
  ClosedLoopSystem s(op_.graph(), std::move(agents), controllers_);
  require(s.state_dim() == state_dim(), ErrorCode::DimensionMismatch, "replacement agents change the state layout");
  return s;
}

Vec ClosedLoopSystem::default_initial_state() const {
  Vec x = Vec::Zero(total_);
  for (size_t e = 0; e < controllers_.size(); ++e)
    x.segment(ctrl_off_[e], controllers_[e].state_dim()) = controllers_[e].initial_state();
  return x;
}

ClosedLoopSystem::Signals ClosedLoopSystem::signals(const Vec& state) const {
  require(state.size() == total_, ErrorCode::DimensionMismatch, "closed-loop state has wrong length");
  const int d = op_.dim();
  const int n = op_.node_count();
  const int m = op_.edge_count();
  Signals s;
  s.y.resize(n * d);
  s.mu.resize(m * d);
  auto agent_outputs = [&](const Vec& u) {
    for (int i = 0; i < n; ++i)
      s.y.segment(i * d, d) =
          output(agents_[i], state.segment(agent_off_[i], agents_[i].state_dim()), u.segment(i * d, d));
  };
  auto controller_outputs = [&](const Vec& zeta) {
    for (int e = 0; e < m; ++e)
      s.mu.segment(e * d, d) = controller_output(
          controllers_[e], state.segment(ctrl_off_[e], controllers_[e].state_dim()), zeta.segment(e * d, d));
  };
  if (controllers_first_) {
    // Controller outputs depend on their states only.
    controller_outputs(Vec::Zero(m * d));
    s.u = -op_.apply(s.mu);
    agent_outputs(s.u);
    s.zeta = op_.tensions(s.y);
  } else {
    agent_outputs(Vec::Zero(n * d));
    s.zeta = op_.tensions(s.y);
    controller_outputs(s.zeta);
    s.u = -op_.apply(s.mu);
  }
  return s;
}

Vec step_rhs(const ClosedLoopSystem& sys, const Vec& state) {
  const auto s = sys.signals(state);
  const int d = sys.op().dim();
  Vec dx(state.size());
  for (size_t i = 0; i < sys.agents().size(); ++i) {
    const auto& a = sys.agents()[i];
    const int off = sys.agent_offset(static_cast<int>(i));
    dx.segment(off, a.state_dim()) =
        rhs(a, state.segment(off, a.state_dim()), s.u.segment(static_cast<int>(i) * d, d));
  }
  for (size_t e = 0; e < sys.controllers().size(); ++e) {
    const auto& c = sys.controllers()[e];
    const int off = sys.controller_offset(static_cast<int>(e));
    dx.segment(off, c.state_dim()) =
        controller_rhs(c, state.segment(off, c.state_dim()), s.zeta.segment(static_cast<int>(e) * d, d));
  }
  return dx;
}

void Trajectory::append(const Trajectory& other) {
  size_t start = 0;
  if (!times.empty() && !other.times.empty() && other.times.front() <= times.back()) start = 1;
  for (size_t k = start; k < other.times.size(); ++k) {
    times.push_back(other.times[k]);
    states.push_back(other.states[k]);
    signals.push_back(other.signals[k]);
  }
  if (method.empty()) {
    method = other.method;
    dt = other.dt;
    tol = other.tol;
    seed = other.seed;
  }
}

std::string Trajectory::to_csv(int node_count, int edge_count, int d) const {
  std::ostringstream os;
  os << "t";
  for (const char* name : {"y", "u"})
    for (int i = 0; i < node_count; ++i)
      for (int k = 0; k < d; ++k) os << "," << name << "[" << i << "." << k << "]";
  for (const char* name : {"zeta", "mu"})
    for (int e = 0; e < edge_count; ++e)
      for (int k = 0; k < d; ++k) os << "," << name << "[" << e << "." << k << "]";
  os << "\n" << std::setprecision(12);
  for (size_t s = 0; s < times.size(); ++s) {
    os << times[s];
    const auto& g = signals[s];
    for (const Vec* v : {&g.y, &g.u, &g.zeta, &g.mu})
      for (Eigen::Index j = 0; j < v->size(); ++j) os << "," << (*v)(j);
    os << "\n";
  }
  return os.str();
}

Trajectory integrate(const ClosedLoopSystem& sys, const Vec& init, double T, const SimOptions& opts, double t0) {
  require(init.size() == sys.state_dim(), ErrorCode::DimensionMismatch, "initial state has wrong length");
  OdeOptions oo;
  oo.method = opts.method;
  oo.dt = opts.dt;
  oo.tol = opts.tol;
  oo.record_every = opts.record_every;
  oo.max_step = opts.max_step;
  const OdeSolution sol = integrate_ode([&](double, const Vec& x) { return step_rhs(sys, x); }, t0, init, T, oo);
  Trajectory traj;
  traj.method = to_string(opts.method);
  traj.dt = opts.dt;
  traj.tol = opts.tol;
  traj.seed = opts.seed;
  traj.times = sol.t;
  traj.states = sol.x;
  traj.signals.reserve(sol.x.size());
  for (const auto& x : sol.x) traj.signals.push_back(sys.signals(x));
  return traj;
}

ConvergenceResult detect_convergence(const Trajectory& traj, double window, double tol) {
  ConvergenceResult res;
  if (traj.times.size() < 2) return res;
  const double T = traj.times.back();
  if (T - traj.times.front() < window) return res;
  auto joined = [&](size_t k) {
    const auto& s = traj.signals[k];
    Vec v(s.y.size() + s.mu.size());
    v << s.y, s.mu;
    return v;
  };
  // Backward scan with running componentwise extremes.
  Vec lo = joined(traj.times.size() - 1);
  Vec hi = lo;
  double var_window = 0.0;
  double t_conv = T;
  bool still = true;
  for (size_t k = traj.times.size(); k-- > 0;) {
    const Vec v = joined(k);
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
    const double var = (hi - lo).size() ? (hi - lo).maxCoeff() : 0.0;
    if (traj.times[k] >= T - window - 1e-12) var_window = var;
    if (still && var <= tol)
      t_conv = traj.times[k];
    else
      still = false;
    if (!still && traj.times[k] < T - window) break;
  }
  res.variation = var_window;
  res.converged = var_window <= tol;
  res.t_conv = t_conv;
  // Window means.
  const int ny = static_cast<int>(traj.signals.back().y.size());
  const int nm = static_cast<int>(traj.signals.back().mu.size());
  Vec ys = Vec::Zero(ny);
  Vec ms = Vec::Zero(nm);
  int count = 0;
  for (size_t k = 0; k < traj.times.size(); ++k) {
    if (traj.times[k] < T - window - 1e-12) continue;
    ys += traj.signals[k].y;
    ms += traj.signals[k].mu;
    ++count;
  }
  res.y_ss = ys / std::max(count, 1);
  res.mu_ss = ms / std::max(count, 1);
  return res;
}

ComparisonReport compare_prediction(const Trajectory& traj, const SteadyStateCertificate& cert, double tol,
                                    int align_dim, double window, double conv_tol) {
  require(!traj.times.empty(), ErrorCode::NotConverged, "empty trajectory");
  const double horizon = traj.times.back() - traj.times.front();
  const double w = window > 0.0 ? window : 0.1 * horizon;
  const ConvergenceResult conv = detect_convergence(traj, w, conv_tol);
  if (!conv.converged) fail(ErrorCode::NotConverged, "trajectory did not settle within the window");
  require(conv.y_ss.size() == cert.y.size() && conv.mu_ss.size() == cert.mu.size(), ErrorCode::DimensionMismatch,
          "certificate does not match the trajectory");
  ComparisonReport rep;
  Vec dy = conv.y_ss - cert.y;
  if (align_dim > 0) {
    require(dy.size() % align_dim == 0, ErrorCode::DimensionMismatch, "alignment block size does not divide y");
    const int n = static_cast<int>(dy.size()) / align_dim;
    Vec mean = Vec::Zero(align_dim);
    for (int i = 0; i < n; ++i) mean += dy.segment(i * align_dim, align_dim);
    mean /= n;
    for (int i = 0; i < n; ++i) dy.segment(i * align_dim, align_dim) -= mean;
    rep.aligned = true;
  }
  rep.y_error = dy.lpNorm<Eigen::Infinity>();
  rep.mu_error = (conv.mu_ss - cert.mu).lpNorm<Eigen::Infinity>();
  rep.pass = rep.y_error <= tol && rep.mu_error <= tol;
  return rep;
}

void run_parallel(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&]() {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace meicmp
