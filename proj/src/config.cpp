#include "meicmp/config.hpp"

#include "meicmp/error.hpp"
#include "meicmp/instances.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace meicmp {

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  fail(ErrorCode::ConfigInvalid, where + ": " + what);
}

const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) invalid(where, "expected a number");
  return j.get<double>();
}

double number_or(const Json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), where + "." + key);
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) invalid(where, "expected an integer");
  return j.get<int>();
}

std::string kind_of(const Json& j, const std::string& where) {
  const Json& k = member(j, "kind", where);
  if (!k.is_string()) invalid(where + ".kind", "expected a string");
  return k.get<std::string>();
}

Mat matrix_or(const Json& j, const char* key, const Mat& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return parse_matrix(j.at(key), where + "." + key);
}

Vec vector_or(const Json& j, const char* key, const Vec& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return parse_vector(j.at(key), where + "." + key);
}

void expect_shape(const Mat& m, int rows, int cols, const std::string& where) {
  if (m.rows() != rows || m.cols() != cols)
    invalid(where, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
}

void expect_size(const Vec& v, int n, const std::string& where) {
  if (v.size() != n) invalid(where, "expected length " + std::to_string(n));
}

AgentModel parse_agent(const Json& j, int d, Rng& rng, const std::string& where) {
  const std::string kind = kind_of(j, where);
  const Mat I = Mat::Identity(d, d);
  const Mat Z = Mat::Zero(d, d);
  AgentModel agent;
  if (kind == "linear") {
    const Mat A = parse_matrix(member(j, "A", where), where + ".A");
    const int nx = static_cast<int>(A.rows());
    expect_shape(A, nx, nx, where + ".A");
    const Mat B = parse_matrix(member(j, "B", where), where + ".B");
    expect_shape(B, nx, d, where + ".B");
    const Mat C = parse_matrix(member(j, "C", where), where + ".C");
    expect_shape(C, d, nx, where + ".C");
    const Mat T = matrix_or(j, "T", Z, where);
    expect_shape(T, d, d, where + ".T");
    const Vec w = vector_or(j, "w", Vec::Zero(nx), where);
    expect_size(w, nx, where + ".w");
    agent = make_linear_agent(A, B, C, T, w);
  } else if (kind == "random_linear") {
    agent = random_meicmp_linear_agent(d, rng, number_or(j, "w_scale", 1.0, where));
  } else if (kind == "damped_oscillator") {
    const Mat M = parse_matrix(member(j, "M", where), where + ".M");
    expect_shape(M, d, d, where + ".M");
    const IntegralFunction psi = parse_function(member(j, "psi", where), d, where + ".psi");
    const Mat B = matrix_or(j, "B", I, where);
    expect_shape(B, d, d, where + ".B");
    const Vec w = vector_or(j, "w", Vec::Zero(d), where);
    expect_size(w, d, where + ".w");
    agent = make_damped_oscillator(M, psi, B, w);
  } else if (kind == "forced_oscillator") {
    if (j.contains("random")) {
      const Json& r = j.at("random");
      const std::string rw = where + ".random";
      double lo = 0.5, hi = 2.0;
      if (r.contains("damping")) {
        const Vec dv = parse_vector(r.at("damping"), rw + ".damping");
        expect_size(dv, 2, rw + ".damping");
        lo = dv(0);
        hi = dv(1);
        if (!(lo > 0.0 && hi >= lo)) invalid(rw + ".damping", "expected 0 < lo <= hi");
      }
      const double cond = number_or(r, "max_condition", 10.0, rw);
      if (cond < 1.0) invalid(rw + ".max_condition", "must be at least 1");
      const double sigma_min = number_or(r, "sigma_min", 1.0, rw);
      if (!(sigma_min > 0.0)) invalid(rw + ".sigma_min", "must be positive");
      agent = random_forced_oscillator(d, rng, cond, lo, hi, number_or(r, "xbar_scale", 1.0, rw), sigma_min);
      if (j.contains("xbar")) {
        const Vec xbar = parse_vector(j.at("xbar"), where + ".xbar");
        expect_size(xbar, d, where + ".xbar");
        agent = make_forced_oscillator(agent.M, agent.psi->P(), xbar);
      }
    } else {
      const Mat omega = parse_matrix(member(j, "Omega", where), where + ".Omega");
      expect_shape(omega, d, d, where + ".Omega");
      const Mat D = parse_matrix(member(j, "D", where), where + ".D");
      expect_shape(D, d, d, where + ".D");
      const Vec xbar = vector_or(j, "xbar", Vec::Zero(d), where);
      expect_size(xbar, d, where + ".xbar");
      agent = make_forced_oscillator(omega, D, xbar);
    }
  } else if (kind == "convex_gradient") {
    const IntegralFunction psi = parse_function(member(j, "psi", where), d, where + ".psi");
    const Mat J = matrix_or(j, "J", Z, where);
    expect_shape(J, d, d, where + ".J");
    const Mat B = matrix_or(j, "B", I, where);
    expect_shape(B, d, d, where + ".B");
    const Mat C = matrix_or(j, "C", I, where);
    expect_shape(C, d, d, where + ".C");
    const Mat T = matrix_or(j, "T", Z, where);
    expect_shape(T, d, d, where + ".T");
    const Vec w = vector_or(j, "w", Vec::Zero(d), where);
    expect_size(w, d, where + ".w");
    agent = make_convex_gradient_agent(psi, J, B, C, T, w);
  } else {
    invalid(where + ".kind", "unknown agent kind '" + kind + "'");
  }
  if (j.contains("leader_z")) {
    const Vec z = parse_vector(j.at("leader_z"), where + ".leader_z");
    expect_size(z, d, where + ".leader_z");
    agent = with_leader_offset(agent, z);
  }
  return agent;
}

SynthesisMode parse_mode(const Json& j, const std::string& where) {
  if (!j.is_string()) invalid(where, "expected \"relative\" or \"absolute\"");
  const auto s = j.get<std::string>();
  if (s == "relative") return SynthesisMode::Relative;
  if (s == "absolute") return SynthesisMode::Absolute;
  invalid(where, "expected \"relative\" or \"absolute\"");
}

SynthesisStrategy parse_strategy(const Json& j, const std::string& where) {
  if (!j.is_string()) invalid(where, "expected \"linear\" or \"reconfigure\"");
  const auto s = j.get<std::string>();
  if (s == "linear") return SynthesisStrategy::Linear;
  if (s == "reconfigure") return SynthesisStrategy::Reconfigure;
  invalid(where, "expected \"linear\" or \"reconfigure\"");
}

Json scalar_map_to_json(const ScalarMap& m) {
  switch (m.kind()) {
    case ScalarMap::Kind::Linear:
      return {{"kind", "linear"}, {"slope", m.coefficient_a()}};
    case ScalarMap::Kind::Cubic:
      return {{"kind", "cubic"}, {"a", m.coefficient_a()}, {"b", m.coefficient_b()}};
    case ScalarMap::Kind::PaperPsi:
      return {{"kind", "paper_psi"}};
    default:
      fail(ErrorCode::UnsupportedKind, "scalar map '" + m.name() + "' cannot be serialised");
  }
}

}  // namespace

Vec parse_vector(const Json& j, const std::string& where) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) invalid(where, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Mat parse_matrix(const Json& j, const std::string& where) {
  if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) invalid(where, "expected a non-empty array of rows");
  // A flat list of numbers is read as a diagonal.
  if (j[0].is_number()) return parse_vector(j, where).asDiagonal();
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) invalid(where, "rows must be non-empty arrays");
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) invalid(where, "ragged matrix rows");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

ScalarMap parse_scalar_map(const Json& j, const std::string& where) {
  const std::string kind = kind_of(j, where);
  if (kind == "linear") return ScalarMap::linear(number(member(j, "slope", where), where + ".slope"));
  if (kind == "cubic") {
    const double a = number_or(j, "a", 0.0, where);
    const double b = number_or(j, "b", 0.0, where);
    if (a < 0.0 || b < 0.0) invalid(where, "cubic coefficients must be nonnegative");
    return ScalarMap::cubic(a, b);
  }
  if (kind == "paper_psi") return ScalarMap::paper_psi();
  invalid(where + ".kind", "unknown scalar map kind '" + kind + "'");
}

IntegralFunction parse_function(const Json& j, int dim, const std::string& where) {
  const std::string kind = kind_of(j, where);
  if (kind == "quadratic") {
    const Mat P = parse_matrix(member(j, "P", where), where + ".P");
    expect_shape(P, dim, dim, where + ".P");
    const Vec q = vector_or(j, "q", Vec::Zero(dim), where);
    expect_size(q, dim, where + ".q");
    return IntegralFunction::quadratic(P, q, number_or(j, "c", 0.0, where));
  }
  if (kind == "zero") return IntegralFunction::zero(dim);
  if (kind == "indicator_zero") return IntegralFunction::indicator_zero(dim);
  if (kind == "separable") {
    std::vector<ScalarMap> maps;
    if (j.contains("maps")) {
      const Json& ms = j.at("maps");
      if (!ms.is_array() || static_cast<int>(ms.size()) != dim) invalid(where + ".maps", "expected one map per coordinate");
      for (size_t i = 0; i < ms.size(); ++i) maps.push_back(parse_scalar_map(ms[i], where + ".maps[" + std::to_string(i) + "]"));
    } else {
      const ScalarMap m = parse_scalar_map(member(j, "map", where), where + ".map");
      maps.assign(dim, m);
    }
    return IntegralFunction::separable(std::move(maps));
  }
  if (kind == "sum") {
    const Json& ts = member(j, "terms", where);
    if (!ts.is_array() || ts.empty()) invalid(where + ".terms", "expected a non-empty array");
    std::vector<IntegralFunction> terms;
    for (size_t i = 0; i < ts.size(); ++i) terms.push_back(parse_function(ts[i], dim, where + ".terms[" + std::to_string(i) + "]"));
    return IntegralFunction::sum(std::move(terms));
  }
  if (kind == "shifted") {
    IntegralFunction inner = parse_function(member(j, "inner", where), dim, where + ".inner");
    const Vec a = vector_or(j, "offset", Vec::Zero(dim), where);
    expect_size(a, dim, where + ".offset");
    const Vec b = vector_or(j, "linear", Vec::Zero(dim), where);
    expect_size(b, dim, where + ".linear");
    return IntegralFunction::shifted(std::move(inner), a, b, number_or(j, "constant", 0.0, where));
  }
  invalid(where + ".kind", "unknown function kind '" + kind + "'");
}

ControllerModel parse_controller(const Json& j, int d, const std::string& where) {
  const std::string kind = kind_of(j, where);
  ControllerModel c;
  auto psi = [&]() { return j.contains("psi") ? parse_scalar_map(j.at("psi"), where + ".psi") : ScalarMap::paper_psi(); };
  if (kind == "nonlinear_integrator") {
    c = make_nonlinear_integrator(d, psi());
  } else if (kind == "nonlinear_filter") {
    c = make_nonlinear_filter(d, psi());
  } else if (kind == "linear_synthesis") {
    const Vec o = vector_or(j, "offset", Vec::Zero(d), where);
    expect_size(o, d, where + ".offset");
    c = make_linear_synthesis(o);
  } else if (kind == "reconfigured") {
    const ControllerModel inner = parse_controller(member(j, "inner", where), d, where + ".inner");
    const Vec a = vector_or(j, "alpha", Vec::Zero(d), where);
    expect_size(a, d, where + ".alpha");
    const Vec b = vector_or(j, "beta", Vec::Zero(d), where);
    expect_size(b, d, where + ".beta");
    c = make_reconfigured(inner, a, b);
  } else {
    invalid(where + ".kind", "unknown controller kind '" + kind + "'");
  }
  if (j.contains("eta0")) {
    const Vec eta0 = parse_vector(j.at("eta0"), where + ".eta0");
    expect_size(eta0, c.state_dim(), where + ".eta0");
    c = with_initial_state(c, eta0);
  }
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ConfigInvalid, "'" + path + "' is not valid JSON: " + e.what());
  }
}

NetworkConfig parse_config(const Json& doc, std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) invalid("document", "expected a JSON object");
  const Json& schema = member(doc, "schema", "document");
  if (!schema.is_string() || schema.get<std::string>() != kNetworkSchema)
    invalid("schema", std::string("expected \"") + kNetworkSchema + "\"");

  NetworkConfig cfg;
  cfg.document = doc;
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer()) invalid("seed", "expected an integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (seed_override) cfg.seed = *seed_override;

  const Json& g = member(doc, "graph", "document");
  const int n = integer(member(g, "nodes", "graph"), "graph.nodes");
  if (n < 1) invalid("graph.nodes", "need at least one node");
  std::vector<Edge> edges;
  const Json& es = member(g, "edges", "graph");
  if (!es.is_array()) invalid("graph.edges", "expected an array of [tail, head] pairs");
  for (size_t k = 0; k < es.size(); ++k) {
    const std::string w = "graph.edges[" + std::to_string(k) + "]";
    if (!es[k].is_array() || es[k].size() != 2) invalid(w, "expected [tail, head]");
    edges.push_back({integer(es[k][0], w), integer(es[k][1], w)});
  }
  try {
    cfg.graph = DirectedGraph(n, edges);
  } catch (const Error& e) {
    invalid("graph", e.what());
  }

  cfg.dim = integer(member(doc, "dim", "document"), "dim");
  if (cfg.dim < 1) invalid("dim", "must be positive");
  const int d = cfg.dim;

  Rng rng(cfg.seed);
  const Json& as = member(doc, "agents", "document");
  if (!as.is_array() || static_cast<int>(as.size()) != n) invalid("agents", "expected one agent per node");
  for (size_t i = 0; i < as.size(); ++i) {
    const std::string w = "agents[" + std::to_string(i) + "]";
    cfg.agents.push_back(parse_agent(as[i], d, rng, w));
    Vec x0;
    if (as[i].contains("x0")) {
      x0 = parse_vector(as[i].at("x0"), w + ".x0");
      expect_size(x0, cfg.agents.back().state_dim(), w + ".x0");
    }
    cfg.agent_x0.push_back(x0);
  }

  const int m = cfg.graph.edge_count();
  const Json& cs = member(doc, "controllers", "document");
  if (cs.is_object()) {
    const ControllerModel c = parse_controller(cs, d, "controllers");
    cfg.controllers.assign(m, c);
  } else if (cs.is_array()) {
    if (static_cast<int>(cs.size()) != m) invalid("controllers", "expected one controller per edge or a single object");
    for (size_t e = 0; e < cs.size(); ++e) cfg.controllers.push_back(parse_controller(cs[e], d, "controllers[" + std::to_string(e) + "]"));
  } else {
    invalid("controllers", "expected an object or an array");
  }

  if (doc.contains("objective")) {
    const Json& o = doc.at("objective");
    if (o.contains("schedule")) {
      const Json& sch = o.at("schedule");
      if (!sch.is_array()) invalid("objective.schedule", "expected an array");
      for (size_t k = 0; k < sch.size(); ++k) {
        const std::string w = "objective.schedule[" + std::to_string(k) + "]";
        Segment s;
        s.y_star = parse_vector(member(sch[k], "y_star", w), w + ".y_star");
        expect_size(s.y_star, n * d, w + ".y_star");
        s.duration = number(member(sch[k], "duration", w), w + ".duration");
        if (!(s.duration >= 0.0)) invalid(w + ".duration", "must be nonnegative");
        cfg.schedule.push_back(s);
      }
    }
    if (o.contains("strategy")) cfg.strategy = parse_strategy(o.at("strategy"), "objective.strategy");
    if (o.contains("mode")) cfg.mode = parse_mode(o.at("mode"), "objective.mode");
    if (o.contains("leader") && !o.at("leader").is_null()) {
      const int l = integer(o.at("leader"), "objective.leader");
      if (l < 0 || l >= n) invalid("objective.leader", "node index out of range");
      cfg.leader = l;
    }
  }

  if (doc.contains("solver")) {
    const Json& s = doc.at("solver");
    cfg.solver.tol = number_or(s, "tol", cfg.solver.tol, "solver");
    cfg.solver.step = number_or(s, "step", cfg.solver.step, "solver");
    if (s.contains("max_iter")) cfg.solver.max_iter = integer(s.at("max_iter"), "solver.max_iter");
    if (!(cfg.solver.tol > 0.0) || cfg.solver.max_iter < 1 || cfg.solver.step < 0.0)
      invalid("solver", "tol and max_iter must be positive, step nonnegative");
  }

  if (doc.contains("simulation")) {
    const Json& s = doc.at("simulation");
    auto& sim = cfg.simulation;
    if (s.contains("method")) {
      const Json& mj = s.at("method");
      const std::string method = mj.is_string() ? mj.get<std::string>() : "";
      if (method == "rk4")
        sim.ode.method = OdeMethod::RK4;
      else if (method == "rk45")
        sim.ode.method = OdeMethod::RK45;
      else
        invalid("simulation.method", "expected \"rk4\" or \"rk45\"");
    }
    sim.ode.dt = number_or(s, "dt", sim.ode.dt, "simulation");
    sim.ode.tol = number_or(s, "tol", sim.ode.tol, "simulation");
    sim.ode.record_every = number_or(s, "record_every", sim.ode.record_every, "simulation");
    sim.ode.max_step = number_or(s, "max_step", sim.ode.max_step, "simulation");
    sim.horizon = number_or(s, "horizon", sim.horizon, "simulation");
    sim.window = number_or(s, "window", sim.window, "simulation");
    sim.conv_tol = number_or(s, "conv_tol", sim.conv_tol, "simulation");
    if (s.contains("initial")) {
      const Json& ij = s.at("initial");
      sim.initial = ij.is_string() ? ij.get<std::string>() : "";
      if (sim.initial != "zero" && sim.initial != "steady") invalid("simulation.initial", "expected \"zero\" or \"steady\"");
    }
    if (!(sim.ode.dt > 0.0) || !(sim.ode.tol > 0.0) || sim.ode.record_every < 0.0 || !(sim.conv_tol > 0.0))
      invalid("simulation", "dt, tol and conv_tol must be positive, record_every nonnegative");
  }
  cfg.simulation.ode.seed = cfg.seed;
  return cfg;
}

NetworkConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  return parse_config(read_json_file(path), seed_override);
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json controller_to_json(const ControllerModel& c) {
  Json j;
  switch (c.kind) {
    case ControllerModel::Kind::NonlinearIntegrator:
      j = {{"kind", "nonlinear_integrator"}, {"psi", scalar_map_to_json(c.psi.front())}};
      break;
    case ControllerModel::Kind::NonlinearFilter:
      j = {{"kind", "nonlinear_filter"}, {"psi", scalar_map_to_json(c.psi.front())}};
      break;
    case ControllerModel::Kind::LinearSynthesis:
      j = {{"kind", "linear_synthesis"}, {"offset", to_json(c.offset)}};
      break;
    case ControllerModel::Kind::Reconfigured:
      j = {{"kind", "reconfigured"}, {"inner", controller_to_json(*c.inner)}, {"alpha", to_json(c.alpha)},
           {"beta", to_json(c.beta)}};
      break;
    case ControllerModel::Kind::Custom:
      fail(ErrorCode::UnsupportedKind, "custom controllers cannot be serialised");
  }
  if (c.eta0.size() > 0 && c.kind != ControllerModel::Kind::Reconfigured) j["eta0"] = to_json(c.eta0);
  return j;
}

Json make_patch(const NetworkConfig& cfg, const SynthesisSpec& spec, const SynthesisResult& result) {
  Json p;
  p["schema"] = kPatchSchema;
  p["strategy"] = to_string(spec.strategy);
  p["mode"] = to_string(result.report.mode_used);
  p["y_star"] = to_json(spec.y_star);
  p["y_target"] = to_json(result.y_target.size() ? result.y_target : spec.y_star);
  p["orientation"] = Json::array();
  for (const auto& e : cfg.graph.edges()) p["orientation"].push_back({e.tail, e.head});
  Json cs = Json::array();
  for (const auto& c : result.controllers) cs.push_back(controller_to_json(c));
  p["controllers"] = cs;
  if (result.xi.size()) p["xi"] = to_json(result.xi);
  if (result.zeta_star.size()) p["zeta_star"] = to_json(result.zeta_star);
  if (result.alpha) p["alpha"] = to_json(*result.alpha);
  if (result.beta) p["beta"] = to_json(*result.beta);
  if (result.leader_z)
    p["leader"] = {{"node", result.leader}, {"z", to_json(*result.leader_z)}};
  else
    p["leader"] = nullptr;
  return p;
}

void apply_patch(NetworkConfig& cfg, const Json& patch) {
  if (!patch.is_object()) invalid("patch", "expected a JSON object");
  const Json& schema = member(patch, "schema", "patch");
  if (!schema.is_string() || schema.get<std::string>() != kPatchSchema)
    invalid("patch.schema", std::string("expected \"") + kPatchSchema + "\"");
  const Json& cs = member(patch, "controllers", "patch");
  if (!cs.is_array() || static_cast<int>(cs.size()) != cfg.graph.edge_count())
    invalid("patch.controllers", "expected one controller per edge");
  std::vector<ControllerModel> controllers;
  for (size_t e = 0; e < cs.size(); ++e)
    controllers.push_back(parse_controller(cs[e], cfg.dim, "patch.controllers[" + std::to_string(e) + "]"));
  cfg.controllers = std::move(controllers);
  cfg.document["controllers"] = cs;
  if (patch.contains("leader") && !patch.at("leader").is_null()) {
    const Json& l = patch.at("leader");
    const int node = integer(member(l, "node", "patch.leader"), "patch.leader.node");
    if (node < 0 || node >= cfg.graph.node_count()) invalid("patch.leader.node", "node index out of range");
    const Vec z = parse_vector(member(l, "z", "patch.leader"), "patch.leader.z");
    expect_size(z, cfg.dim, "patch.leader.z");
    cfg.agents[node] = with_leader_offset(cfg.agents[node], z);
    cfg.document["agents"][node]["leader_z"] = to_json(z);
  }
}

}  // namespace meicmp
