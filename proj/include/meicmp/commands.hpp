#pragma once

#include "meicmp/config.hpp"
#include "meicmp/error.hpp"
#include "meicmp/simulate.hpp"
#include "meicmp/synthesis.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace meicmp {

/// Exit status used by the command line for each failure class:
/// 1 usage/config, 2 mathematical infeasibility, 3 numerical failure.
int exit_code_for(ErrorCode code);

struct CommandOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<SynthesisMode> mode;
  std::optional<int> leader;
  std::optional<SynthesisStrategy> strategy;
  int jobs = 1;
  /// Controller patch applied on top of the config before running.
  std::string patch;
  /// verify: candidate steady state (JSON with u, y, zeta, mu).
  std::string candidate;
  /// synthesize: explicit target; otherwise the schedule's segment.
  std::optional<Vec> y_star;
  int segment = 0;
  int samples = 10000;
  double tol = 1e-6;
};

/// Problem assembled from the config's agents and controllers.
NetworkProblem assemble_config(const NetworkConfig& cfg);

/// Synthesis for one target, plus the steady state of the synthesized loop
/// recovered as a certificate and checked independently.
struct SynthesisOutcome {
  SynthesisSpec spec;
  SynthesisResult result;
  std::vector<AgentModel> agents;  // including the leader offset
  NetworkProblem problem;          // synthesized closed loop
  SteadyStateCertificate certificate;
  VerifyReport verification;
};

SynthesisOutcome run_synthesis(const NetworkConfig& cfg, const SynthesisSpec& spec, double verify_tol = 1e-6);

/// Closed-loop initial state: explicit agent x0 / controller eta0 from the
/// config, or the predicted steady state when `steady` is requested.
Vec initial_state(const NetworkConfig& cfg, const ClosedLoopSystem& sys);

struct SegmentSummary {
  int index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  Vec y_target;
  SynthesisMode mode_used = SynthesisMode::Absolute;
  ConvergenceResult convergence;
  /// Distance of the converged output to the target (relative mode compares E^T y).
  double error = 0.0;
  bool reached = false;
};

struct SimulationRun {
  Trajectory trajectory;
  std::vector<SegmentSummary> segments;
  std::optional<ComparisonReport> comparison;
  Json summary;
};

/// Runs the config's schedule (synthesizing controllers for each segment) or,
/// without a schedule, a single horizon with the configured controllers.
SimulationRun run_simulation(const NetworkConfig& cfg, const CommandOptions& opts, double target_tol = 1e-3);

int cmd_predict(const CommandOptions& opts, std::ostream& out);
int cmd_simulate(const CommandOptions& opts, std::ostream& out);
int cmd_synthesize(const CommandOptions& opts, std::ostream& out);
int cmd_check_cm(const CommandOptions& opts, std::ostream& out);
int cmd_verify(const CommandOptions& opts, std::ostream& out);

/// Dispatches a subcommand and maps exceptions to exit codes, writing the
/// message to `err`.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace meicmp
