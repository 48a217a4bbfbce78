#pragma once

// Command implementations behind the `dikey` executable. Each command takes
// an options struct and output streams and returns the process exit code:
//
//   0  success
//   1  invalid input (bad arguments, unreadable or invalid files, singular anchor)
//   2  a verification threshold failed
//   3  vertex cap exceeded

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "dikey/construction.hpp"
#include "dikey/error.hpp"
#include "dikey/io.hpp"
#include "dikey/keyrate.hpp"
#include "dikey/locality.hpp"
#include "dikey/selftest.hpp"

namespace dikey::cli {

enum ExitCode : int { kOk = 0, kInvalidInput = 1, kThresholdFailure = 2, kVertexCap = 3 };

enum class Format { Json, Csv };

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  throw Error(ErrorKind::InvalidArgument, "unknown format '" + s + "' (expected csv or json)");
}

inline int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::VertexCapExceeded ? kVertexCap : kInvalidInput;
}

inline constexpr std::uint64_t kFallbackSeed = 1;

/// DIKEY_SEED if set, else kFallbackSeed.
inline std::uint64_t default_seed() {
  const char* env = std::getenv("DIKEY_SEED");
  if (env == nullptr || *env == '\0') return kFallbackSeed;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc{} || ptr != end) throw Error(ErrorKind::Parse, std::string("DIKEY_SEED is not an unsigned integer: ") + env);
  return v;
}

/// Locale-independent, 12 significant digits.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, ptr);
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline json error_json(const std::string& command, const Error& e) {
  return json{{"command", command}, {"status", "error"}, {"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}};
}

// Writes to `path` if non-empty, otherwise to `fallback`.
inline void emit(const std::string& text, const std::string& path, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  f << text;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Threshold checks shared by certify and selftest-check

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool at_least = false;  // pass iff value >= threshold, else value <= threshold

  bool passed() const { return at_least ? value >= threshold : value <= threshold; }
};

inline json to_json(const Check& c) {
  return json{{"name", c.name},
              {"value", c.value},
              {"threshold", c.threshold},
              {"comparison", c.at_least ? ">=" : "<="},
              {"pass", c.passed()}};
}

struct InstanceOptions {
  std::size_t d = 2;
  double epsilon = 0.5;
  std::size_t junk_a = 1;
  std::size_t junk_b = 1;
  std::uint64_t seed = kFallbackSeed;
  std::size_t anchor = 0;
  double noise = 0.0;
  std::string bob_plugin;  // measurement file with extra Bob settings
  double tolerance = 1e-8;

  bool dilated() const { return junk_a > 1 || junk_b > 1; }
};

inline Realization build_instance(const InstanceOptions& opt) {
  require_dim(opt.d);
  require_epsilon(opt.epsilon);
  if (opt.junk_a < 1 || opt.junk_b < 1) throw Error(ErrorKind::InvalidArgument, "junk dimensions must be at least 1");
  if (opt.anchor >= opt.d) throw Error(ErrorKind::InvalidArgument, "anchor must be below d");
  if (!(opt.tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  std::vector<Povm> extra;
  if (!opt.bob_plugin.empty()) extra = load_measurements(opt.bob_plugin);
  Realization r = ideal_realization(opt.d, opt.epsilon, extra);
  if (opt.noise != 0.0) r = with_bob_key_noise(std::move(r), opt.noise);
  if (opt.dilated()) r = dilate(r, opt.junk_a, opt.junk_b, opt.seed);
  return r;
}

/// Runs every self-test verification on `r` and appends one check each.
inline void selftest_checks(const Realization& r, const InstanceOptions& opt, std::vector<Check>& checks, json& detail) {
  const OverlapMatrix o = overlap_direct(opt.d, opt.epsilon);
  const double tol = opt.tolerance;
  const RelationReport rel = check_relations(r.alice[0], r.alice[1], o);
  const RelationReport rel_hat = check_relations(r.bob_hats[0], r.bob_hats[1], o);
  const IsometryPair iso = build_isometries(r, o, opt.anchor);
  const MeasurementExtraction me = verify_measurement_extraction(iso, r.alice[0]);
  const BobProjection bp = verify_bob_projection(iso);
  const StateExtraction se = verify_state_extraction(iso, r.state, opt.d);
  const MatrixSelfTest mt = verify_matrix_selftest(r, iso);

  checks.push_back({"relations", rel.max_residual(), tol});
  checks.push_back({"bob_relations", rel_hat.max_residual(), tol});
  checks.push_back({"isometry", isometry_residual(iso), tol});
  checks.push_back({"measurement_extraction", me.residual, tol});
  checks.push_back({"bob_projection", bp.residual, tol});
  checks.push_back({"state_extraction", se.residual, tol});
  checks.push_back({"matrix_selftest", mt.residual, tol});
  checks.push_back({"junk_state", mt.junk_state_defect, tol});

  detail["min_overlap"] = o.min_entry();
  detail["anchor"] = opt.anchor;
  detail["a_tilde_deviation"] = me.anchor_projector_deviation;
  detail["junk_rank"] = se.sigma_rank;
  detail["alice_marginals"] = mt.marginals;
}

struct CertifyOptions : InstanceOptions {
  double rate_slack = 1e-6;
};

inline json instance_json(const InstanceOptions& opt) {
  json j{{"d", opt.d}, {"epsilon", opt.epsilon}, {"anchor", opt.anchor}, {"tolerance", opt.tolerance}, {"noise", opt.noise}};
  j["dilation"] = opt.dilated() ? json{{"junk_a", opt.junk_a}, {"junk_b", opt.junk_b}, {"seed", opt.seed}} : json(nullptr);
  if (!opt.bob_plugin.empty()) j["bob_plugin"] = opt.bob_plugin;
  return j;
}

inline int finish_checks(const std::string& command, json report, const std::vector<Check>& checks,
                         const std::string& out_path, Format fmt, std::ostream& out, std::ostream& err) {
  json arr = json::array();
  json failed = json::array();
  for (const auto& c : checks) {
    arr.push_back(to_json(c));
    if (!c.passed()) {
      failed.push_back(c.name);
      err << command << ": check '" << c.name << "' failed: " << format_number(c.value) << (c.at_least ? " < " : " > ")
          << format_number(c.threshold) << "\n";
    }
  }
  report["checks"] = std::move(arr);
  report["status"] = failed.empty() ? "pass" : "fail";
  report["failed"] = failed;

  if (fmt == Format::Json) {
    detail::emit(report.dump(2) + "\n", out_path, out);
  } else {
    std::string text = "check,value,threshold,pass\n";
    for (const auto& c : checks) {
      text += c.name + "," + format_number(c.value) + "," + format_number(c.threshold) + "," + (c.passed() ? "1" : "0") + "\n";
    }
    detail::emit(text, out_path, out);
  }
  return failed.empty() ? kOk : kThresholdFailure;
}

/// ideal (optionally noisy, plugged, dilated) instance → relations →
/// isometries → every verification → key rate.
inline int cmd_certify(const CertifyOptions& opt, const std::string& out_path, Format fmt, std::ostream& out,
                       std::ostream& err) {
  try {
    const Realization r = build_instance(opt);
    json report{{"command", "certify"}, {"instance", instance_json(opt)}};
    std::vector<Check> checks;
    json detail;
    selftest_checks(r, opt, checks, detail);

    const KeyRateReport kr = devetak_winter(r);
    const double target = std::log2(static_cast<double>(opt.d));
    checks.push_back({"product_form", kr.product_form_residual, opt.tolerance});
    checks.push_back({"purification", kr.purification_residual, opt.tolerance});
    checks.push_back({"dw_rate", kr.dw_rate, target - opt.rate_slack, true});

    report["selftest"] = std::move(detail);
    report["key_rate"] = json{{"h_a", kr.h_a},
                              {"h_a_given_b", kr.h_a_given_b},
                              {"h_a_given_e", kr.h_a_given_e},
                              {"dw_rate", kr.dw_rate},
                              {"log2_d", target},
                              {"environment_dim", kr.environment_dim}};
    return finish_checks("certify", std::move(report), checks, out_path, fmt, out, err);
  } catch (const Error& e) {
    err << "certify: " << e.what() << "\n";
    if (fmt == Format::Json) detail::emit(detail::error_json("certify", e).dump(2) + "\n", out_path, out);
    return exit_code_for(e);
  }
}

/// The self-test module alone, on a (by default 2×2-junk) dilated instance.
inline int cmd_selftest_check(const InstanceOptions& opt, const std::string& out_path, Format fmt, std::ostream& out,
                              std::ostream& err) {
  try {
    const Realization r = build_instance(opt);
    json report{{"command", "selftest-check"}, {"instance", instance_json(opt)}};
    std::vector<Check> checks;
    json detail;
    selftest_checks(r, opt, checks, detail);
    report["selftest"] = std::move(detail);
    return finish_checks("selftest-check", std::move(report), checks, out_path, fmt, out, err);
  } catch (const Error& e) {
    err << "selftest-check: " << e.what() << "\n";
    if (fmt == Format::Json) detail::emit(detail::error_json("selftest-check", e).dump(2) + "\n", out_path, out);
    return exit_code_for(e);
  }
}

// ---------------------------------------------------------------------------
// sweep

struct SweepConfig {
  std::vector<std::size_t> d_values{2};
  std::vector<double> epsilons;
  std::size_t junk_a = 1;
  std::size_t junk_b = 1;
  std::uint64_t seed = kFallbackSeed;
  std::size_t anchor = 0;
  double noise = 0.0;
  bool lp = false;
  std::uint64_t vertex_cap = kDefaultVertexCap;
  std::size_t jobs = 1;
  bool timing = true;
  std::string csv_path;   // empty: stdout
  std::string plot_path;  // empty: <csv_path>.gp, or none when writing to stdout

  /// Range checks; sorts epsilons descending and drops duplicates.
  void validate() {
    if (d_values.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one d");
    if (epsilons.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one epsilon");
    for (auto d : d_values) require_dim(d);
    for (double e : epsilons) require_epsilon(e);
    if (junk_a < 1 || junk_b < 1) throw Error(ErrorKind::InvalidArgument, "junk dimensions must be at least 1");
    if (!(noise >= 0.0 && noise <= 0.5)) throw Error(ErrorKind::InvalidArgument, "noise must lie in [0, 0.5]");
    std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
    epsilons.erase(std::unique(epsilons.begin(), epsilons.end()), epsilons.end());
  }

  std::string resolved_plot_path() const {
    if (!plot_path.empty()) return plot_path;
    return csv_path.empty() ? std::string() : csv_path + ".gp";
  }
};

namespace detail {

template <class T>
void read_field(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Keys: d, epsilon, junk_a, junk_b, seed, anchor, noise, lp, vertex_cap,
/// jobs, timing, csv, plot. Missing keys keep `base`'s values.
inline SweepConfig sweep_config_from_json(const json& j, SweepConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "sweep config must be an object");
  detail::read_field(j, "d", base.d_values);
  detail::read_field(j, "epsilon", base.epsilons);
  detail::read_field(j, "junk_a", base.junk_a);
  detail::read_field(j, "junk_b", base.junk_b);
  detail::read_field(j, "seed", base.seed);
  detail::read_field(j, "anchor", base.anchor);
  detail::read_field(j, "noise", base.noise);
  detail::read_field(j, "lp", base.lp);
  detail::read_field(j, "vertex_cap", base.vertex_cap);
  detail::read_field(j, "jobs", base.jobs);
  detail::read_field(j, "timing", base.timing);
  detail::read_field(j, "csv", base.csv_path);
  detail::read_field(j, "plot", base.plot_path);
  return base;
}

inline SweepConfig load_sweep_config(const std::string& path, SweepConfig base = {}) {
  return sweep_config_from_json(dikey::detail::read_json_file(path), std::move(base));
}

struct SweepRow {
  std::size_t d = 0;
  double epsilon = 0.0;
  double min_overlap = 0.0;
  double relation_residual = 0.0;
  double h_a_given_e = 0.0;
  double h_a_given_b = 0.0;
  double dw_rate = 0.0;
  double l1_to_eps0 = 0.0;
  std::optional<double> lp_distance;
  double runtime_ms = 0.0;
  std::string error;

  bool ok() const { return error.empty(); }
};

inline SweepRow sweep_point(const SweepConfig& cfg, std::size_t d, double eps) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRow row;
  row.d = d;
  row.epsilon = eps;
  try {
    const OverlapMatrix o = overlap_direct(d, eps);
    Realization ideal = ideal_realization(d, eps);
    Realization base = ideal_realization(d, 0.0);
    if (cfg.noise != 0.0) {
      ideal = with_bob_key_noise(std::move(ideal), cfg.noise);
      base = with_bob_key_noise(std::move(base), cfg.noise);
    }
    const Realization r = (cfg.junk_a > 1 || cfg.junk_b > 1) ? dilate(ideal, cfg.junk_a, cfg.junk_b, cfg.seed) : ideal;

    row.min_overlap = o.min_entry();
    row.relation_residual = check_relations(r.alice[0], r.alice[1], o).max_residual();
    const KeyRateReport kr = devetak_winter(r);
    row.h_a_given_e = kr.h_a_given_e;
    row.h_a_given_b = kr.h_a_given_b;
    row.dw_rate = kr.dw_rate;
    const Correlation p = born_correlation(ideal);
    row.l1_to_eps0 = l1_between(p, born_correlation(base));
    if (cfg.lp && vertex_count(p.scenario()) <= cfg.vertex_cap) {
      row.lp_distance = l1_distance_to_local(p, cfg.vertex_cap).distance;
    }
  } catch (const Error& e) {
    row.error = e.what();
  }
  row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// Grid order: d ascending as given, then epsilon descending. Points run on
/// up to cfg.jobs threads (0 = hardware concurrency).
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  std::vector<std::pair<std::size_t, double>> grid;
  for (auto d : cfg.d_values)
    for (double e : cfg.epsilons) grid.emplace_back(d, e);
  std::vector<SweepRow> rows(grid.size());

  std::size_t jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
  jobs = std::min(jobs, grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) rows[i] = sweep_point(cfg, grid[i].first, grid[i].second);
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  return rows;
}

inline const char* kSweepHeader =
    "d,epsilon,min_overlap,relation_residual,h_a_e_bits,h_a_b_bits,dw_rate_bits,l1_to_eps0,lp_distance,runtime_ms,error";

inline std::string sweep_csv(const std::vector<SweepRow>& rows, bool timing) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.d) + "," + format_number(r.epsilon) + ",";
    if (r.ok()) {
      out += format_number(r.min_overlap) + "," + format_number(r.relation_residual) + "," + format_number(r.h_a_given_e) +
             "," + format_number(r.h_a_given_b) + "," + format_number(r.dw_rate) + "," + format_number(r.l1_to_eps0) + ",";
      if (r.lp_distance) out += format_number(*r.lp_distance);
    } else {
      out += ",,,,,,";
    }
    out += ",";
    if (timing) out += format_number(r.runtime_ms);
    out += "," + detail::csv_escape(r.error) + "\n";
  }
  return out;
}

inline json sweep_json(const std::vector<SweepRow>& rows, bool timing) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j{{"d", r.d}, {"epsilon", r.epsilon}};
    if (r.ok()) {
      j["min_overlap"] = r.min_overlap;
      j["relation_residual"] = r.relation_residual;
      j["h_a_e_bits"] = r.h_a_given_e;
      j["h_a_b_bits"] = r.h_a_given_b;
      j["dw_rate_bits"] = r.dw_rate;
      j["l1_to_eps0"] = r.l1_to_eps0;
      j["lp_distance"] = r.lp_distance ? json(*r.lp_distance) : json(nullptr);
    } else {
      j["error"] = r.error;
    }
    if (timing) j["runtime_ms"] = r.runtime_ms;
    arr.push_back(std::move(j));
  }
  return arr;
}

/// gnuplot script: dw_rate and l1_to_eps0 against epsilon, log-log, one
/// series per d.
inline std::string gnuplot_script(const std::string& csv_path, const std::vector<std::size_t>& d_values) {
  std::string stem = csv_path;
  if (auto dot = stem.rfind('.'); dot != std::string::npos && stem.find('/', dot) == std::string::npos) stem.resize(dot);
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set terminal pngcairo size 1200,500\n"
    << "set output '" << stem << ".png'\n"
    << "set multiplot layout 1,2\n"
    << "set logscale xy\n"
    << "set xlabel 'epsilon'\n"
    << "set key left top\n";
  auto series = [&](int column) {
    std::string line;
    for (std::size_t i = 0; i < d_values.size(); ++i) {
      line += i == 0 ? "plot " : ", \\\n     ";
      line += "'" + csv_path + "' every ::1 using 2:($1==" + std::to_string(d_values[i]) + " ? $" + std::to_string(column) +
              " : 1/0) with linespoints title 'd=" + std::to_string(d_values[i]) + "'";
    }
    return line + "\n";
  };
  s << "set ylabel 'dw rate (bits)'\n" << series(7);
  s << "set ylabel 'l1 to eps=0'\n" << series(8);
  s << "unset multiplot\n";
  return s.str();
}

inline int cmd_sweep(SweepConfig cfg, Format fmt, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
  } catch (const Error& e) {
    err << "sweep: " << e.what() << "\n";
    return kInvalidInput;
  }
  const auto rows = run_sweep(cfg);
  try {
    detail::emit(fmt == Format::Csv ? sweep_csv(rows, cfg.timing) : sweep_json(rows, cfg.timing).dump(2) + "\n", cfg.csv_path,
                 out);
    if (const auto plot = cfg.resolved_plot_path(); !plot.empty() && !cfg.csv_path.empty() && fmt == Format::Csv) {
      detail::emit(gnuplot_script(cfg.csv_path, cfg.d_values), plot, out);
    }
  } catch (const Error& e) {
    err << "sweep: " << e.what() << "\n";
    return kInvalidInput;
  }
  std::size_t good = 0;
  for (const auto& r : rows) {
    if (r.ok()) {
      ++good;
    } else {
      err << "sweep: d=" << r.d << " epsilon=" << format_number(r.epsilon) << ": " << r.error << "\n";
    }
  }
  if (good == 0) {
    err << "sweep: no grid point succeeded\n";
    return kThresholdFailure;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// distance and local-bound

inline int cmd_distance(const std::string& path, std::uint64_t cap, const std::string& out_path, Format fmt, std::ostream& out,
                        std::ostream& err) {
  try {
    const Correlation p = load_correlation(path);
    const DistanceReport rep = l1_distance_to_local(p, cap);
    if (fmt == Format::Json) {
      json j = to_json(rep);
      j["command"] = "distance";
      j["file"] = path;
      j["vertices"] = vertex_count(p.scenario());
      detail::emit(j.dump(2) + "\n", out_path, out);
    } else {
      detail::emit("distance,normalized_distance,lp_objective,status,iterations\n" + format_number(rep.distance) + "," +
                       format_number(rep.normalized_distance) + "," + format_number(rep.lp_objective) + "," +
                       to_string(rep.status) + "," + std::to_string(rep.iterations) + "\n",
                   out_path, out);
    }
    if (rep.status != LpStatus::Optimal) {
      err << "distance: simplex stopped with status " << to_string(rep.status) << "\n";
      return kThresholdFailure;
    }
    return kOk;
  } catch (const Error& e) {
    err << "distance: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

inline int cmd_local_bound(const std::string& path, std::uint64_t cap, const std::string& out_path, Format fmt,
                           std::ostream& out, std::ostream& err) {
  try {
    const BellFunctional f = load_functional(path);
    const LocalBound lb = local_bound(f, cap);
    if (fmt == Format::Json) {
      json j{{"command", "local-bound"}, {"file", path}, {"value", lb.value}, {"argmax", to_json(lb.argmax)}, {"vertices", lb.vertices}};
      detail::emit(j.dump(2) + "\n", out_path, out);
    } else {
      std::string alice, bob;
      for (auto a : lb.argmax.alice_assignment) alice += (alice.empty() ? "" : " ") + std::to_string(a);
      for (auto b : lb.argmax.bob_assignment) bob += (bob.empty() ? "" : " ") + std::to_string(b);
      detail::emit("value,vertices,alice,bob\n" + format_number(lb.value) + "," + std::to_string(lb.vertices) + "," + alice + "," +
                       bob + "\n",
                   out_path, out);
    }
    return kOk;
  } catch (const Error& e) {
    err << "local-bound: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace dikey::cli
