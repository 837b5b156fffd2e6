#include "meicmp/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

meicmp::Vec parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--y-star", "'" + item + "' is not a number");
    }
  }
  meicmp::Vec v(static_cast<Eigen::Index>(values.size()));
  for (size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady-state prediction, controller synthesis and simulation for diffusively coupled networks"};
  app.require_subcommand(1);

  meicmp::CommandOptions opts;
  std::string mode, strategy, y_star;
  int leader = -1;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "network configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--patch", opts.patch, "controller patch to apply first")->check(CLI::ExistingFile);
    sub->add_option("--jobs", opts.jobs, "parallel workers for batch work")->check(CLI::PositiveNumber);
    sub->add_option("--tol", opts.tol, "verification tolerance")->check(CLI::PositiveNumber);
  };
  auto synthesis_flags = [&](CLI::App* sub) {
    sub->add_option("--mode", mode, "relative|absolute")->check(CLI::IsMember({"relative", "absolute"}));
    sub->add_option("--leader", leader, "leader node index")->check(CLI::NonNegativeNumber);
    sub->add_option("--strategy", strategy, "linear|reconfigure")->check(CLI::IsMember({"linear", "reconfigure"}));
  };

  auto* predict = app.add_subcommand("predict", "solve the optimal potential problem and recover the steady state");
  common(predict);
  auto* simulate = app.add_subcommand("simulate", "integrate the closed loop (segment schedule if present)");
  common(simulate);
  synthesis_flags(simulate);
  auto* synthesize = app.add_subcommand("synthesize", "synthesize controllers forcing a target output");
  common(synthesize);
  synthesis_flags(synthesize);
  synthesize->add_option("--y-star", y_star, "comma-separated target output (default: schedule segment)");
  synthesize->add_option("--segment", opts.segment, "schedule segment used as target");
  auto* check_cm = app.add_subcommand("check-cm", "classify agents and controllers for cyclic monotonicity");
  common(check_cm);
  check_cm->add_option("--samples", opts.samples, "random cycles per relation")->check(CLI::PositiveNumber);
  auto* verify = app.add_subcommand("verify", "check a candidate steady state against the network");
  common(verify);
  verify->add_option("--candidate", opts.candidate, "candidate (JSON with u, y, zeta, mu)")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0; every other parse problem is a usage error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) opts.seed = seed;
  if (!mode.empty()) opts.mode = mode == "relative" ? meicmp::SynthesisMode::Relative : meicmp::SynthesisMode::Absolute;
  if (!strategy.empty())
    opts.strategy = strategy == "linear" ? meicmp::SynthesisStrategy::Linear : meicmp::SynthesisStrategy::Reconfigure;
  if (leader >= 0) opts.leader = leader;
  if (!y_star.empty()) {
    try {
      opts.y_star = parse_list(y_star);
    } catch (const CLI::ParseError& e) {
      std::cerr << e.what() << "\n";
      return 1;
    }
  }
  return meicmp::run_command(chosen->get_name(), opts, std::cout, std::cerr);
}
