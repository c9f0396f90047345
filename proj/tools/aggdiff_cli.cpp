// Command-line front end: one subcommand per scenario plus a reference-profile
// dump.  Exit code 0 when every check in the scenario report passes, 1 when
// some check fails, 2 on configuration or runtime errors.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "aggdiff/experiment.hpp"

namespace {

struct ScenarioArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  bool dump_profiles = false;
};

int run_scenario(aggdiff::Scenario sc, const ScenarioArgs& args) {
  aggdiff::ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    cfg = aggdiff::parse_config(args.config_path);
    if (cfg.scenario != sc) {
      std::fprintf(stderr, "error: config file is for scenario '%s' but the '%s' subcommand was used\n",
                   aggdiff::scenario_name(cfg.scenario), aggdiff::scenario_name(sc));
      return 2;
    }
  } else {
    cfg = aggdiff::default_config(sc);
    aggdiff::validate_config(cfg);
  }
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.dump_profiles) cfg.dump_profiles = true;

  const std::string out =
      args.out_dir.empty() ? std::string("out/") + aggdiff::scenario_name(sc) : args.out_dir;
  const aggdiff::ExperimentReport rep = aggdiff::run_experiment(cfg, out);

  for (const auto& c : rep.checks)
    std::printf("[%s] %-28s %s (value %.6g)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.claim.c_str(), c.value);
  std::printf("%s: %s, report in %s/report.json\n", aggdiff::scenario_name(sc),
              rep.pass ? "all checks passed" : "CHECKS FAILED", out.c_str());
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1D nonlocal aggregation-diffusion solver and asymptotics harness"};
  app.require_subcommand(1);

  ScenarioArgs args;
  const std::pair<const char*, aggdiff::Scenario> scenarios[] = {
      {"decay", aggdiff::Scenario::Decay},
      {"rarefaction", aggdiff::Scenario::Rarefaction},
      {"epsilon_limit", aggdiff::Scenario::EpsilonLimit},
      {"rescale", aggdiff::Scenario::Rescale},
      {"particles", aggdiff::Scenario::Particles},
      {"validate", aggdiff::Scenario::Validate},
  };
  for (const auto& [name, sc] : scenarios) {
    CLI::App* sub = app.add_subcommand(
        name, std::string("run the ") + name + " scenario and write its report");
    sub->add_option("--config", args.config_path, "JSON config file (defaults used if omitted)");
    sub->add_option("--out", args.out_dir, "output directory (default out/<scenario>)");
    sub->add_option("--seed", args.seed, "override the RNG seed");
    sub->add_flag("--dump-profiles", args.dump_profiles, "write per-checkpoint profile CSVs");
    const aggdiff::Scenario scv = sc;
    sub->callback([&args, scv]() {
      const int rc = run_scenario(scv, args);
      if (rc != 0) throw CLI::RuntimeError(rc);
    });
  }

  // reference-profile dump: rarefaction fan and viscous profile on a mesh
  double ref_amp = 2.0, ref_eps = 0.1, ref_t = 10.0, ref_L = 100.0;
  int ref_cells = 2048;
  std::string ref_out = "reference.csv";
  CLI::App* ref = app.add_subcommand("reference", "dump fan and viscous profiles to CSV");
  ref->add_option("--amplitude,-A", ref_amp, "sign-part strength A")->check(CLI::PositiveNumber);
  ref->add_option("--eps", ref_eps, "viscosity (0 dumps the fan twice)");
  ref->add_option("--time,-t", ref_t, "evaluation time")->check(CLI::PositiveNumber);
  ref->add_option("--half-width,-L", ref_L, "mesh half width")->check(CLI::PositiveNumber);
  ref->add_option("--cells,-N", ref_cells, "mesh cells");
  ref->add_option("--out", ref_out, "output CSV path");
  ref->callback([&]() {
    aggdiff::write_reference_csv(ref_out, aggdiff::Grid(ref_L, ref_cells), ref_amp, ref_eps,
                                 ref_t);
    std::printf("wrote %s\n", ref_out.c_str());
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
