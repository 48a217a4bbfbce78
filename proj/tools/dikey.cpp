#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dikey/cli.hpp"

namespace {

using namespace dikey;
using namespace dikey::cli;

void add_instance_options(CLI::App* cmd, InstanceOptions& opt) {
  cmd->add_option("--d", opt.d, "local dimension (>= 2)")->required();
  cmd->add_option("--epsilon", opt.epsilon, "perturbation in [0,1]")->required();
  cmd->add_option("--junk-a", opt.junk_a, "Alice's junk dimension");
  cmd->add_option("--junk-b", opt.junk_b, "Bob's junk dimension");
  cmd->add_option("--seed", opt.seed, "dilation seed (default: DIKEY_SEED or 1)");
  cmd->add_option("--anchor", opt.anchor, "anchor column j of the isometries");
  cmd->add_option("--noise", opt.noise, "Bob key-outcome shift probability in [0,0.5]");
  cmd->add_option("--bob-plugin", opt.bob_plugin, "measurement file with extra Bob settings")->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dikey: self-testing and device-independent key-rate toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  double tolerance = 1e-8;
  std::size_t jobs = 1;
  std::string out_path;
  std::string format;
  app.add_option("--tolerance", tolerance, "residual threshold for certify and selftest-check");
  app.add_option("--jobs", jobs, "worker threads for sweep (0 = all cores)");
  app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kInvalidInput;
  }

  CertifyOptions certify;
  certify.seed = seed;
  auto* certify_cmd = app.add_subcommand("certify", "full pipeline on one (d, epsilon) instance; JSON report");
  add_instance_options(certify_cmd, certify);

  InstanceOptions selftest;
  selftest.seed = seed;
  selftest.junk_a = 2;
  selftest.junk_b = 2;
  auto* selftest_cmd = app.add_subcommand("selftest-check", "self-test verifications on a dilated instance");
  add_instance_options(selftest_cmd, selftest);

  SweepConfig sweep;
  sweep.seed = seed;
  std::string config_path;
  std::string plot_path;
  bool no_timing = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "grid over d and epsilon; CSV table plus gnuplot script");
  sweep_cmd->add_option("--config", config_path, "JSON config; flags override its fields")->check(CLI::ExistingFile);
  sweep_cmd->add_option("--d", sweep.d_values, "dimensions")->delimiter(',');
  sweep_cmd->add_option("--epsilon", sweep.epsilons, "perturbations")->delimiter(',');
  sweep_cmd->add_option("--junk-a", sweep.junk_a, "Alice's junk dimension");
  sweep_cmd->add_option("--junk-b", sweep.junk_b, "Bob's junk dimension");
  sweep_cmd->add_option("--seed", sweep.seed, "dilation seed");
  sweep_cmd->add_option("--anchor", sweep.anchor, "anchor column");
  sweep_cmd->add_option("--noise", sweep.noise, "Bob key-outcome shift probability");
  sweep_cmd->add_flag("--lp,!--no-lp", sweep.lp, "compute the LP distance to the local polytope");
  sweep_cmd->add_option("--vertex-cap", sweep.vertex_cap, "skip the LP above this many vertices");
  sweep_cmd->add_option("--plot", plot_path, "gnuplot script path (default: <out>.gp)");
  sweep_cmd->add_flag("--no-timing", no_timing, "leave runtime_ms empty for reproducible output");

  std::string distance_file;
  std::uint64_t distance_cap = kDefaultVertexCap;
  auto* distance_cmd = app.add_subcommand("distance", "l1 distance from a correlation file to the local polytope");
  distance_cmd->add_option("file", distance_file, "correlation JSON")->required();
  distance_cmd->add_option("--vertex-cap", distance_cap, "maximum number of deterministic strategies");

  std::string functional_file;
  std::uint64_t bound_cap = kDefaultVertexCap;
  auto* bound_cmd = app.add_subcommand("local-bound", "local bound of a Bell functional file");
  bound_cmd->add_option("file", functional_file, "functional JSON")->required();
  bound_cmd->add_option("--vertex-cap", bound_cap, "maximum number of deterministic strategies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalidInput;
  }

  auto fmt_or = [&](Format fallback) { return format.empty() ? fallback : parse_format(format); };

  if (*certify_cmd) {
    certify.tolerance = tolerance;
    return cmd_certify(certify, out_path, fmt_or(Format::Json), std::cout, std::cerr);
  }
  if (*selftest_cmd) {
    selftest.tolerance = tolerance;
    return cmd_selftest_check(selftest, out_path, fmt_or(Format::Json), std::cout, std::cerr);
  }
  if (*sweep_cmd) {
    SweepConfig cfg = sweep;
    if (!config_path.empty()) {
      try {
        SweepConfig base;
        base.seed = seed;
        cfg = load_sweep_config(config_path, base);
      } catch (const Error& e) {
        std::cerr << "sweep: " << e.what() << "\n";
        return kInvalidInput;
      }
      // flags win over the file
      if (sweep_cmd->count("--d")) cfg.d_values = sweep.d_values;
      if (sweep_cmd->count("--epsilon")) cfg.epsilons = sweep.epsilons;
      if (sweep_cmd->count("--junk-a")) cfg.junk_a = sweep.junk_a;
      if (sweep_cmd->count("--junk-b")) cfg.junk_b = sweep.junk_b;
      if (sweep_cmd->count("--seed")) cfg.seed = sweep.seed;
      if (sweep_cmd->count("--anchor")) cfg.anchor = sweep.anchor;
      if (sweep_cmd->count("--noise")) cfg.noise = sweep.noise;
      if (sweep_cmd->count("--lp") || sweep_cmd->count("--no-lp")) cfg.lp = sweep.lp;
      if (sweep_cmd->count("--vertex-cap")) cfg.vertex_cap = sweep.vertex_cap;
    }
    if (app.count("--jobs")) cfg.jobs = jobs;
    if (!out_path.empty()) cfg.csv_path = out_path;
    if (!plot_path.empty()) cfg.plot_path = plot_path;
    if (no_timing) cfg.timing = false;
    return cmd_sweep(cfg, fmt_or(Format::Csv), std::cout, std::cerr);
  }
  if (*distance_cmd) return cmd_distance(distance_file, distance_cap, out_path, fmt_or(Format::Json), std::cout, std::cerr);
  if (*bound_cmd) return cmd_local_bound(functional_file, bound_cap, out_path, fmt_or(Format::Json), std::cout, std::cerr);
  return kInvalidInput;
}
