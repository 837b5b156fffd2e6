#include "meicmp/commands.hpp"

#include "meicmp/relations.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace meicmp {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::SelfLoop:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::Disconnected:
    case ErrorCode::EmptyList:
    case ErrorCode::UnsupportedKind:
    case ErrorCode::RelationNotEvaluable:
    case ErrorCode::AlgebraicLoop:
      return 1;
    case ErrorCode::Infeasible:
    case ErrorCode::NotForcible:
    case ErrorCode::EmptySelection:
    case ErrorCode::EmptyInverse:
    case ErrorCode::InfiniteValue:
    case ErrorCode::OutsideDomain:
    case ErrorCode::Unbounded:
    case ErrorCode::SingularA:
    case ErrorCode::SingularM:
    case ErrorCode::RadiusNotFound:
      return 2;
    case ErrorCode::SolverFailure:
    case ErrorCode::NoConvergence:
    case ErrorCode::LeastSquaresFailure:
    case ErrorCode::StepUnderflow:
    case ErrorCode::NonFiniteState:
    case ErrorCode::NotConverged:
      return 3;
  }
  return 3;
}

namespace {

NetworkConfig load_with_overrides(const CommandOptions& opts) {
  if (opts.config.empty()) fail(ErrorCode::Usage, "--config is required");
  NetworkConfig cfg = load_config(opts.config, opts.seed);
  if (!opts.patch.empty()) apply_patch(cfg, read_json_file(opts.patch));
  if (opts.mode) cfg.mode = *opts.mode;
  if (opts.strategy) cfg.strategy = *opts.strategy;
  if (opts.leader) {
    require(*opts.leader >= 0 && *opts.leader < cfg.graph.node_count(), ErrorCode::Usage, "--leader is out of range");
    cfg.leader = opts.leader;
  }
  return cfg;
}

std::filesystem::path output_path(const CommandOptions& opts, const std::string& name) {
  std::filesystem::path dir(opts.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Usage, "cannot create output directory '" + opts.out + "'");
  return dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::Usage, "cannot write '" + path.string() + "'");
  f << text;
}

std::string fmt(const Vec& v) {
  std::ostringstream os;
  os << std::setprecision(10) << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << "]";
  return os.str();
}

Json orientation(const DirectedGraph& g) {
  Json o = Json::array();
  for (const auto& e : g.edges()) o.push_back({e.tail, e.head});
  return o;
}

Json certificate_json(const SteadyStateCertificate& c) {
  return {{"u", to_json(c.u)},
          {"y", to_json(c.y)},
          {"zeta", to_json(c.zeta)},
          {"mu", to_json(c.mu)},
          {"residuals",
           {{"consistency", c.residual_consistency},
            {"relations", c.residual_relations},
            {"inclusion", c.residual_inclusion}}},
          {"selection_made", c.selection_made}};
}

Json verify_json(const VerifyReport& r) {
  return {{"valid", r.valid},
          {"zeta_consistency", r.zeta_consistency},
          {"u_consistency", r.u_consistency},
          {"node_relation", r.node_relation},
          {"edge_relation", r.edge_relation},
          {"inclusion", r.inclusion},
          {"failed", r.failed}};
}

double window_for(const SimulationSettings& s, double duration) { return s.window > 0.0 ? s.window : 0.1 * duration; }

// Keep agent states; keep controller states when the layout of that edge is unchanged.
Vec carry_state(const ClosedLoopSystem& from, const Vec& x, const ClosedLoopSystem& to) {
  if (from.state_dim() == to.state_dim()) return x;
  Vec y = to.default_initial_state();
  for (size_t i = 0; i < to.agents().size(); ++i) {
    const int k = to.agents()[i].state_dim();
    y.segment(to.agent_offset(static_cast<int>(i)), k) = x.segment(from.agent_offset(static_cast<int>(i)), k);
  }
  for (size_t e = 0; e < to.controllers().size(); ++e) {
    const int k = to.controllers()[e].state_dim();
    if (from.controllers()[e].state_dim() == k)
      y.segment(to.controller_offset(static_cast<int>(e)), k) = x.segment(from.controller_offset(static_cast<int>(e)), k);
  }
  return y;
}

std::string agent_kind(const AgentModel& a) {
  switch (a.kind) {
    case AgentModel::Kind::Linear:
      return "linear";
    case AgentModel::Kind::ConvexGradient:
      return "convex_gradient";
    case AgentModel::Kind::DampedOscillator:
      return "damped_oscillator";
    case AgentModel::Kind::Custom:
      return "custom";
  }
  return "custom";
}

std::string controller_kind(const ControllerModel& c) {
  switch (c.kind) {
    case ControllerModel::Kind::NonlinearIntegrator:
      return "nonlinear_integrator";
    case ControllerModel::Kind::NonlinearFilter:
      return "nonlinear_filter";
    case ControllerModel::Kind::LinearSynthesis:
      return "linear_synthesis";
    case ControllerModel::Kind::Reconfigured:
      return "reconfigured";
    case ControllerModel::Kind::Custom:
      return "custom";
  }
  return "custom";
}

}  // namespace

NetworkProblem assemble_config(const NetworkConfig& cfg) { return assemble(cfg.graph, cfg.agents, cfg.controllers); }

SynthesisOutcome run_synthesis(const NetworkConfig& cfg, const SynthesisSpec& spec, double verify_tol) {
  const NetworkProblem problem = assemble_config(cfg);
  SynthesisResult result = synthesize(problem, cfg.controllers, spec, cfg.solver.tol, cfg.solver);
  std::vector<AgentModel> agents = cfg.agents;
  if (result.leader_z) agents[result.leader] = with_leader_offset(agents[result.leader], *result.leader_z);
  NetworkProblem closed = assemble(cfg.graph, agents, result.controllers);
  const Vec y = result.y_target.size() ? result.y_target : spec.y_star;
  SteadyStateCertificate cert = recover_certificate(closed, y, closed.op.tensions(y));
  VerifyReport check = verify_steady_state(closed, Candidate{cert.u, cert.y, cert.zeta, cert.mu}, verify_tol);
  return SynthesisOutcome{spec, std::move(result), std::move(agents), std::move(closed), std::move(cert),
                          std::move(check)};
}

Vec initial_state(const NetworkConfig& cfg, const ClosedLoopSystem& sys) {
  Vec x = sys.default_initial_state();
  const int d = sys.op().dim();
  if (cfg.simulation.initial == "steady") {
    const NetworkProblem problem = assemble(sys.op().graph(), sys.agents(), sys.controllers());
    const SteadyStateCertificate c = predict_steady_state(problem, cfg.solver);
    for (size_t i = 0; i < sys.agents().size(); ++i) {
      const auto& a = sys.agents()[i];
      x.segment(sys.agent_offset(static_cast<int>(i)), a.state_dim()) =
          agent_equilibrium_state(a, c.u.segment(static_cast<int>(i) * d, d));
    }
    for (size_t e = 0; e < sys.controllers().size(); ++e) {
      const auto& ctl = sys.controllers()[e];
      x.segment(sys.controller_offset(static_cast<int>(e)), ctl.state_dim()) = controller_equilibrium_state(
          ctl, c.zeta.segment(static_cast<int>(e) * d, d), c.mu.segment(static_cast<int>(e) * d, d));
    }
    return x;
  }
  for (size_t i = 0; i < cfg.agent_x0.size() && i < sys.agents().size(); ++i)
    if (cfg.agent_x0[i].size() > 0)
      x.segment(sys.agent_offset(static_cast<int>(i)), sys.agents()[i].state_dim()) = cfg.agent_x0[i];
  return x;
}

SimulationRun run_simulation(const NetworkConfig& cfg, const CommandOptions& opts, double target_tol) {
  (void)opts;
  SimulationRun run;
  const auto& sim = cfg.simulation;
  Json& s = run.summary;
  s["orientation"] = orientation(cfg.graph);
  s["method"] = to_string(sim.ode.method);
  s["dt"] = sim.ode.dt;
  s["tol"] = sim.ode.tol;
  s["seed"] = cfg.seed;

  if (cfg.schedule.empty()) {
    if (!(sim.horizon > 0.0)) fail(ErrorCode::Usage, "simulation horizon must be positive");
    const ClosedLoopSystem sys(cfg.graph, cfg.agents, cfg.controllers);
    run.trajectory = integrate(sys, initial_state(cfg, sys), sim.horizon, sim.ode);
    SegmentSummary seg;
    seg.t_end = sim.horizon;
    seg.convergence = detect_convergence(run.trajectory, window_for(sim, sim.horizon), sim.conv_tol);
    seg.reached = seg.convergence.converged;
    run.segments.push_back(seg);
    s["converged"] = seg.convergence.converged;
    s["y_ss"] = to_json(seg.convergence.y_ss);
    s["mu_ss"] = to_json(seg.convergence.mu_ss);
    s["t_conv"] = seg.convergence.t_conv;
    s["variation"] = seg.convergence.variation;
    // Compare with the optimizer when a prediction is available.
    try {
      const NetworkProblem problem = assemble_config(cfg);
      OppSolution sol;
      const SteadyStateCertificate cert = predict_steady_state(problem, cfg.solver, &sol);
      if (seg.convergence.converged) {
        run.comparison = compare_prediction(run.trajectory, cert, target_tol, sol.anchored ? cfg.dim : 0,
                                            window_for(sim, sim.horizon), sim.conv_tol);
        s["comparison"] = {{"y_error", run.comparison->y_error},
                           {"mu_error", run.comparison->mu_error},
                           {"aligned", run.comparison->aligned},
                           {"pass", run.comparison->pass}};
      }
      s["prediction"] = certificate_json(cert);
    } catch (const Error& e) {
      s["prediction_error"] = e.what();
    }
    return run;
  }

  double t = 0.0;
  Vec x;
  std::optional<ClosedLoopSystem> prev;
  bool all = true;
  Json segs = Json::array();
  for (size_t k = 0; k < cfg.schedule.size(); ++k) {
    const Segment& segment = cfg.schedule[k];
    if (!(segment.duration > 0.0)) fail(ErrorCode::Usage, "segment " + std::to_string(k) + " has zero duration");
    SynthesisSpec spec{segment.y_star, cfg.mode, cfg.leader, cfg.strategy};
    const SynthesisOutcome outcome = run_synthesis(cfg, spec);
    ClosedLoopSystem sys(cfg.graph, outcome.agents, outcome.result.controllers);
    x = prev ? carry_state(*prev, x, sys) : initial_state(cfg, sys);
    const Trajectory piece = integrate(sys, x, segment.duration, sim.ode, t);
    x = piece.states.back();
    run.trajectory.append(piece);

    SegmentSummary summary;
    summary.index = static_cast<int>(k);
    summary.t_start = t;
    summary.t_end = t + segment.duration;
    summary.y_target = outcome.result.y_target.size() ? outcome.result.y_target : segment.y_star;
    summary.mode_used = outcome.result.report.mode_used;
    summary.convergence = detect_convergence(piece, window_for(sim, segment.duration), sim.conv_tol);
    const Vec dy = summary.convergence.y_ss - summary.y_target;
    summary.error = summary.mode_used == SynthesisMode::Relative ? sys.op().tensions(dy).lpNorm<Eigen::Infinity>()
                                                                 : dy.lpNorm<Eigen::Infinity>();
    summary.reached = summary.convergence.converged && summary.error <= target_tol;
    all = all && summary.reached;
    segs.push_back({{"index", summary.index},
                    {"t_start", summary.t_start},
                    {"t_end", summary.t_end},
                    {"y_star", to_json(segment.y_star)},
                    {"y_target", to_json(summary.y_target)},
                    {"mode", to_string(summary.mode_used)},
                    {"converged", summary.convergence.converged},
                    {"t_conv", summary.convergence.t_conv},
                    {"variation", summary.convergence.variation},
                    {"y_ss", to_json(summary.convergence.y_ss)},
                    {"mu_ss", to_json(summary.convergence.mu_ss)},
                    {"error", summary.error},
                    {"reached", summary.reached},
                    {"certificate_valid", outcome.verification.valid}});
    run.segments.push_back(summary);
    t += segment.duration;
    prev.emplace(std::move(sys));
  }
  s["segments"] = segs;
  s["converged"] = all;
  return run;
}

int cmd_predict(const CommandOptions& opts, std::ostream& out) {
  const NetworkConfig cfg = load_with_overrides(opts);
  const NetworkProblem problem = assemble_config(cfg);
  OppSolution sol;
  const SteadyStateCertificate cert = predict_steady_state(problem, cfg.solver, &sol);
  Json report = certificate_json(cert);
  report["orientation"] = orientation(cfg.graph);
  report["solver"] = {{"method", sol.method},
                      {"iterations", sol.iterations},
                      {"residual", sol.residual},
                      {"converged", sol.converged},
                      {"anchored", sol.anchored}};
  report["valid"] = cert.valid(opts.tol);
  out << "y = " << fmt(cert.y) << "\n"
      << "u = " << fmt(cert.u) << "\n"
      << "zeta = " << fmt(cert.zeta) << "\n"
      << "mu = " << fmt(cert.mu) << "\n"
      << "max residual = " << cert.max_residual() << (sol.anchored ? " (anchored)" : "") << "\n";
  if (!opts.out.empty()) {
    write_text(output_path(opts, "prediction.json"), report.dump(2) + "\n");
    std::ostringstream trace;
    trace << "iteration,objective,residual\n" << std::setprecision(12);
    for (const auto& r : sol.trace) trace << r.iteration << "," << r.objective << "," << r.residual << "\n";
    write_text(output_path(opts, "opp_trace.csv"), trace.str());
  }
  if (!cert.valid(opts.tol)) fail(ErrorCode::NoConvergence, "recovered certificate exceeds the residual tolerance");
  return 0;
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out) {
  const NetworkConfig cfg = load_with_overrides(opts);
  const SimulationRun run = run_simulation(cfg, opts);
  if (!opts.out.empty()) {
    write_text(output_path(opts, "trajectory.csv"),
               run.trajectory.to_csv(cfg.graph.node_count(), cfg.graph.edge_count(), cfg.dim));
    write_text(output_path(opts, "summary.json"), run.summary.dump(2) + "\n");
  }
  for (const auto& seg : run.segments) {
    out << "segment " << seg.index << " [" << seg.t_start << ", " << seg.t_end << "]: "
        << (seg.convergence.converged ? "converged" : "not converged") << ", y_ss = " << fmt(seg.convergence.y_ss);
    if (seg.y_target.size()) out << ", error = " << seg.error;
    out << "\n";
  }
  if (run.comparison)
    out << "prediction: y error " << run.comparison->y_error << ", mu error " << run.comparison->mu_error << " -> "
        << (run.comparison->pass ? "match" : "mismatch") << "\n";
  return 0;
}

int cmd_synthesize(const CommandOptions& opts, std::ostream& out) {
  const NetworkConfig cfg = load_with_overrides(opts);
  Vec y_star;
  if (opts.y_star) {
    y_star = *opts.y_star;
  } else {
    require(!cfg.schedule.empty(), ErrorCode::Usage, "no target given (use --y-star or an objective schedule)");
    require(opts.segment >= 0 && opts.segment < static_cast<int>(cfg.schedule.size()), ErrorCode::Usage,
            "--segment out of range");
    y_star = cfg.schedule[opts.segment].y_star;
  }
  require(y_star.size() == cfg.graph.node_count() * cfg.dim, ErrorCode::ConfigInvalid, "target has wrong length");
  const SynthesisSpec spec{y_star, cfg.mode, cfg.leader, cfg.strategy};
  const SynthesisOutcome o = run_synthesis(cfg, spec, opts.tol);
  const auto& rep = o.result.report;

  std::ostringstream text;
  auto yes = [](bool b) { return b ? "pass" : "fail"; };
  text << "target y* = " << fmt(y_star) << "\n"
       << "strategy: " << to_string(spec.strategy) << ", mode: " << to_string(rep.mode_used) << "\n"
       << "forcible by the agents alone: " << (rep.forcibility.forcible ? "yes" : "no") << " (residual "
       << rep.forcibility.residual << ")\n"
       << "edge integrals strictly convex at zeta*: " << yes(rep.uniqueness.outer_strict) << "\n"
       << "agent conjugates strictly convex along agreement: " << yes(rep.uniqueness.inner_strict) << "\n"
       << "0 in sum of agent inverse relations at target: " << yes(rep.uniqueness.stationary) << "\n";
  if (!rep.uniqueness.note.empty()) text << "note: " << rep.uniqueness.note << "\n";
  if (o.result.leader_z) text << "leader node " << o.result.leader << ", z = " << fmt(*o.result.leader_z) << "\n";
  for (const auto& w : rep.warnings) text << "warning: " << w << "\n";
  text << "steady-state check at target: " << (o.verification.valid ? "valid" : "INVALID")
       << (o.verification.failed.empty() ? "" : " (" + o.verification.failed + ")") << "\n";

  Json patch = make_patch(cfg, spec, o.result);
  patch["report"] = {{"forcible", rep.forcibility.forcible},
                     {"forcibility_residual", rep.forcibility.residual},
                     {"outer_strict", rep.uniqueness.outer_strict},
                     {"inner_strict", rep.uniqueness.inner_strict},
                     {"stationary", rep.uniqueness.stationary},
                     {"warnings", rep.warnings},
                     {"verification", verify_json(o.verification)},
                     {"certificate", certificate_json(o.certificate)}};
  out << text.str();
  if (!opts.out.empty()) {
    write_text(output_path(opts, "patch.json"), patch.dump(2) + "\n");
    write_text(output_path(opts, "synthesis_report.txt"), text.str());
  } else {
    out << patch.dump(2) << "\n";
  }
  if (!o.verification.valid) fail(ErrorCode::NoConvergence, "synthesized steady state failed verification");
  return 0;
}

int cmd_check_cm(const CommandOptions& opts, std::ostream& out) {
  const NetworkConfig cfg = load_with_overrides(opts);
  struct Row {
    std::string component, kind, exact = "n/a", randomized;
    int index = 0;
    CmReport report;
  };
  const int n = cfg.graph.node_count();
  const int m = cfg.graph.edge_count();
  std::vector<Row> rows(static_cast<size_t>(n + m));
  run_parallel(n + m, opts.jobs, [&](int k) {
    Row& row = rows[static_cast<size_t>(k)];
    VectorRelation rel = VectorRelation::affine(Mat::Identity(1, 1), Vec::Zero(1));
    if (k < n) {
      const AgentModel& a = cfg.agents[k];
      row.component = "agent";
      row.index = k;
      row.kind = agent_kind(a);
      if (a.kind == AgentModel::Kind::Linear)
        row.exact = to_string(is_meicmp_linear(a.A, a.B, a.C, a.T, 1e-8).kind);
      else if (a.kind == AgentModel::Kind::DampedOscillator)
        row.exact = to_string(is_meicmp_oscillator(a.M, a.B, 1e-8).kind);
      rel = agent_ss_relation(a);
    } else {
      const ControllerModel& c = cfg.controllers[k - n];
      row.component = "controller";
      row.index = k - n;
      row.kind = controller_kind(c);
      rel = controller_ss_relation(c);
    }
    CmSampler sampler;
    sampler.seed = cfg.seed + static_cast<std::uint64_t>(k);
    row.report = check_cm(rel, sampler, opts.samples, 6, 1e-9);
    row.randomized = row.report.pass ? "CM" : "not CM";
  });

  std::ostringstream csv;
  csv << "component,index,kind,exact,randomized,cycles,worst_sum,witness_sum,witness\n" << std::setprecision(10);
  for (const auto& r : rows) {
    csv << r.component << "," << r.index << "," << r.kind << "," << r.exact << "," << r.randomized << ","
        << r.report.cycles_tested << "," << r.report.worst_sum << ",";
    if (r.report.counterexample) {
      // Witness cell: pairs separated by ';', each "u components/y components" space-separated.
      csv << cyclic_sum(*r.report.counterexample) << ",";
      bool first = true;
      for (const auto& [u, y] : *r.report.counterexample) {
        if (!first) csv << ";";
        first = false;
        for (Eigen::Index i = 0; i < u.size(); ++i) csv << (i ? " " : "") << u(i);
        csv << "/";
        for (Eigen::Index i = 0; i < y.size(); ++i) csv << (i ? " " : "") << y(i);
      }
    } else {
      csv << ",";
    }
    csv << "\n";
    out << r.component << " " << r.index << " (" << r.kind << "): exact " << r.exact << ", sampled " << r.randomized
        << " over " << r.report.cycles_tested << " cycles, worst sum " << r.report.worst_sum << "\n";
    if (r.report.counterexample) {
      out << "  witness cycle:";
      for (const auto& [u, y] : *r.report.counterexample) out << " (u=" << fmt(u) << ", y=" << fmt(y) << ")";
      out << "\n";
    }
  }
  if (!opts.out.empty()) write_text(output_path(opts, "cm_report.csv"), csv.str());
  return 0;
}

int cmd_verify(const CommandOptions& opts, std::ostream& out) {
  const NetworkConfig cfg = load_with_overrides(opts);
  if (opts.candidate.empty()) fail(ErrorCode::Usage, "--candidate is required");
  const Json cj = read_json_file(opts.candidate);
  const NetworkProblem problem = assemble_config(cfg);
  Candidate c;
  if (!cj.is_object() || !cj.contains("y")) fail(ErrorCode::ConfigInvalid, "candidate: missing field 'y'");
  c.y = parse_vector(cj.at("y"), "candidate.y");
  require(c.y.size() == problem.op.node_space(), ErrorCode::ConfigInvalid, "candidate.y has wrong length");
  c.zeta = cj.contains("zeta") ? parse_vector(cj.at("zeta"), "candidate.zeta") : problem.op.tensions(c.y);
  if (cj.contains("mu")) {
    c.mu = parse_vector(cj.at("mu"), "candidate.mu");
  } else {
    fail(ErrorCode::ConfigInvalid, "candidate: missing field 'mu'");
  }
  require(c.zeta.size() == problem.op.edge_space() && c.mu.size() == problem.op.edge_space(),
          ErrorCode::ConfigInvalid, "candidate zeta/mu have wrong length");
  c.u = cj.contains("u") ? parse_vector(cj.at("u"), "candidate.u") : Vec(-problem.op.apply(c.mu));
  require(c.u.size() == problem.op.node_space(), ErrorCode::ConfigInvalid, "candidate.u has wrong length");
  const VerifyReport r = verify_steady_state(problem, c, opts.tol);
  out << (r.valid ? "valid" : "invalid") << " steady state (tol " << opts.tol << ")\n"
      << "  zeta - E^T y: " << r.zeta_consistency << "\n"
      << "  u + E mu:     " << r.u_consistency << "\n"
      << "  agents:       " << r.node_relation << "\n"
      << "  controllers:  " << r.edge_relation << "\n"
      << "  inclusion:    " << r.inclusion << "\n";
  if (!r.failed.empty()) out << "  violated: " << r.failed << "\n";
  if (!opts.out.empty()) write_text(output_path(opts, "verify.json"), verify_json(r).dump(2) + "\n");
  return r.valid ? 0 : 2;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (name == "predict") return cmd_predict(opts, out);
    if (name == "simulate") return cmd_simulate(opts, out);
    if (name == "synthesize") return cmd_synthesize(opts, out);
    if (name == "check-cm") return cmd_check_cm(opts, out);
    if (name == "verify") return cmd_verify(opts, out);
    err << "unknown subcommand '" << name << "'\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    err << "error: malformed document: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace meicmp
