#pragma once

#include "meicmp/couplers.hpp"
#include "meicmp/netopt.hpp"

#include <optional>
#include <string>
#include <vector>

namespace meicmp {

enum class SynthesisMode { Relative, Absolute };
enum class SynthesisStrategy { Linear, Reconfigure };

std::string to_string(SynthesisMode m);
std::string to_string(SynthesisStrategy s);

struct SynthesisSpec {
  Vec y_star;
  SynthesisMode mode = SynthesisMode::Absolute;
  std::optional<int> leader;
  SynthesisStrategy strategy = SynthesisStrategy::Linear;
};

struct ForcibilityReport {
  bool forcible = false;
  /// Element u_i in k_i^{-1}(y*_i) per node with blockwise sum as close to 0 as possible.
  Vec witness;
  /// Norm of the minimum-norm element of sum_i k_i^{-1}(y*_i).
  double residual = 0.0;
  Vec min_norm_sum;
};

struct UniquenessReport {
  bool outer_strict = false;  // every Gamma_e strictly convex near zeta*_e
  bool inner_strict = false;  // A(beta) = sum_i K*_i(y*_i + beta) strictly convex near 0
  bool stationary = false;    // 0 in sum_i k_i^{-1}(y*_i)
  std::string note;
};

struct SynthesisReport {
  ForcibilityReport forcibility;
  UniquenessReport uniqueness;
  SynthesisMode mode_used = SynthesisMode::Absolute;
  std::vector<std::string> warnings;
};

struct SynthesisResult {
  std::vector<ControllerModel> controllers;
  Vec xi;
  Vec zeta_star;
  Vec u_witness;
  /// Output the synthesized loop is designed to settle at (y* itself, or a
  /// translate of it along the agreement space in relative mode).
  Vec y_target;
  std::optional<Vec> alpha;
  std::optional<Vec> beta;
  std::optional<Vec> leader_z;
  int leader = -1;
  SynthesisReport report;
};

ForcibilityReport check_forcible(const NetworkProblem& problem, const Vec& y_star, double tol);

UniquenessReport check_uniqueness_conditions(const NetworkProblem& problem, const Vec& y_star, double tol,
                                             std::uint64_t seed = 0);

/// Agreement shift beta minimizing sum_i K*_i(y*_i + beta), found as the root of
/// beta -> min-norm element of sum_i k_i^{-1}(y*_i + beta).
Vec forcible_agreement_shift(const NetworkProblem& problem, const Vec& y_star, double tol);

SynthesisResult synthesize_linear(const NetworkProblem& problem, const Vec& y_star, SynthesisMode mode, double tol);

/// Minimum-norm mu with -E mu in k^{-1}(y).
Vec g_map(const NetworkProblem& problem, const Vec& y, double tol);

/// alpha = E^T (y* - y0), beta = g(y*) - g(y0).
std::pair<Vec, Vec> reconfiguration_offsets(const NetworkProblem& problem, const Vec& y0, const Vec& y_star,
                                            double tol = 1e-8);
/// Same, with g(y*) evaluated on a different plant (e.g. leader-augmented).
std::pair<Vec, Vec> reconfiguration_offsets(const NetworkProblem& base, const Vec& y0, const NetworkProblem& target,
                                            const Vec& y_star, double tol = 1e-8);

/// Minimum-norm element of sum_i k_i^{-1}(y*_i).
Vec leader_input(const NetworkProblem& problem, const Vec& y_star, int i0, double tol);

/// Problem with node i0's relation replaced by k_{i0}(u + z).
NetworkProblem augment_with_leader(const NetworkProblem& problem, int i0, const Vec& z);

/// Full pipeline used by the command line: forcibility, leader input when
/// requested, and the chosen controller strategy.
SynthesisResult synthesize(const NetworkProblem& problem, const std::vector<ControllerModel>& base_controllers,
                           const SynthesisSpec& spec, double tol, const SolverOptions& opts = {});

}  // namespace meicmp
