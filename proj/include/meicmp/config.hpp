#pragma once

#include "meicmp/couplers.hpp"
#include "meicmp/netgraph.hpp"
#include "meicmp/netopt.hpp"
#include "meicmp/plants.hpp"
#include "meicmp/simulate.hpp"
#include "meicmp/synthesis.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace meicmp {

using Json = nlohmann::json;

inline constexpr const char* kNetworkSchema = "meicmp-network/1";
inline constexpr const char* kPatchSchema = "meicmp-patch/1";

struct Segment {
  Vec y_star;
  double duration = 0.0;
};

struct SimulationSettings {
  SimOptions ode;
  double horizon = 30.0;
  /// Trailing window for convergence detection; <= 0 means 10% of the horizon.
  double window = -1.0;
  double conv_tol = 1e-6;
  /// "zero" (agents at 0, controllers at eta0) or "steady" (predicted steady state).
  std::string initial = "zero";
};

struct NetworkConfig {
  DirectedGraph graph{1, {}};
  int dim = 1;
  std::vector<AgentModel> agents;
  /// Per-agent initial state; empty entries start at zero.
  std::vector<Vec> agent_x0;
  std::vector<ControllerModel> controllers;

  std::vector<Segment> schedule;
  SynthesisStrategy strategy = SynthesisStrategy::Reconfigure;
  SynthesisMode mode = SynthesisMode::Absolute;
  std::optional<int> leader;

  SolverOptions solver;
  SimulationSettings simulation;
  std::uint64_t seed = 0;

  /// The parsed document, kept so patches can be merged and re-emitted.
  Json document;
};

/// Parse a network document. Random agent specs draw from `seed_override`
/// when given, else from the document's seed. Throws ConfigInvalid.
NetworkConfig parse_config(const Json& doc, std::optional<std::uint64_t> seed_override = std::nullopt);
NetworkConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);
Json read_json_file(const std::string& path);

// Element parsers, exposed for tests.
Vec parse_vector(const Json& j, const std::string& where);
Mat parse_matrix(const Json& j, const std::string& where);
ScalarMap parse_scalar_map(const Json& j, const std::string& where);
IntegralFunction parse_function(const Json& j, int dim, const std::string& where);
ControllerModel parse_controller(const Json& j, int dim, const std::string& where);

Json to_json(const Vec& v);
Json to_json(const Mat& m);
/// Serialisable controllers only (no custom callbacks).
Json controller_to_json(const ControllerModel& c);

/// Patch document produced by synthesis; `apply_patch` installs it.
Json make_patch(const NetworkConfig& cfg, const SynthesisSpec& spec, const SynthesisResult& result);
void apply_patch(NetworkConfig& cfg, const Json& patch);

}  // namespace meicmp
