#pragma once

// JSON file formats.
//
//   scenario:     { "alice_outcomes": [k...], "bob_outcomes": [k...] }
//                 ("alice_settings"/"bob_settings" optional, checked if present)
//   correlation:  { "scenario": {...}, "p": [x][y][a][b] }
//   functional:   { "scenario": {...}, "c": [x][y][a][b] }
//   measurements: { "dim": n, "settings": [ { "outcomes": [ M, ... ] } ] }
//                 where each M is n×n row-major, either as n rows of n
//                 [re, im] pairs or as a flat list of n² pairs.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dikey/construction.hpp"
#include "dikey/error.hpp"
#include "dikey/keyrate.hpp"
#include "dikey/locality.hpp"

namespace dikey {

using json = nlohmann::ordered_json;

namespace detail {

inline std::vector<std::size_t> count_list(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw Error(ErrorKind::Parse, std::string("missing array '") + key + "'");
  std::vector<std::size_t> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number_integer() || v.get<long long>() < 1) throw Error(ErrorKind::Parse, std::string("'") + key + "' must hold positive integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

inline double number(const json& v, const char* what) {
  if (!v.is_number()) throw Error(ErrorKind::Parse, std::string(what) + " must be a number");
  return v.get<double>();
}

}  // namespace detail

inline Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "scenario must be an object");
  Scenario s{detail::count_list(j, "alice_outcomes"), detail::count_list(j, "bob_outcomes")};
  if (j.contains("alice_settings") && j.at("alice_settings") != s.alice_settings()) {
    throw Error(ErrorKind::Parse, "alice_settings disagrees with alice_outcomes");
  }
  if (j.contains("bob_settings") && j.at("bob_settings") != s.bob_settings()) {
    throw Error(ErrorKind::Parse, "bob_settings disagrees with bob_outcomes");
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  return s;
}

inline json to_json(const Scenario& s) {
  return json{{"alice_settings", s.alice_settings()},
              {"alice_outcomes", s.alice_outcomes},
              {"bob_settings", s.bob_settings()},
              {"bob_outcomes", s.bob_outcomes}};
}

namespace detail {

inline void fill_tensor(OutcomeTensor& t, const json& arr, const char* key) {
  const auto& s = t.scenario();
  auto shape_error = [&] { return Error(ErrorKind::Parse, std::string("'") + key + "' does not match the scenario shape"); };
  if (!arr.is_array() || arr.size() != s.alice_settings()) throw shape_error();
  for (std::size_t x = 0; x < s.alice_settings(); ++x) {
    if (!arr[x].is_array() || arr[x].size() != s.bob_settings()) throw shape_error();
    for (std::size_t y = 0; y < s.bob_settings(); ++y) {
      const auto& blk = arr[x][y];
      if (!blk.is_array() || blk.size() != s.alice_outcomes[x]) throw shape_error();
      for (std::size_t a = 0; a < s.alice_outcomes[x]; ++a) {
        if (!blk[a].is_array() || blk[a].size() != s.bob_outcomes[y]) throw shape_error();
        for (std::size_t b = 0; b < s.bob_outcomes[y]; ++b) t(a, b, x, y) = number(blk[a][b], key);
      }
    }
  }
}

inline json tensor_to_json(const OutcomeTensor& t) {
  const auto& s = t.scenario();
  json arr = json::array();
  for (std::size_t x = 0; x < s.alice_settings(); ++x) {
    json row = json::array();
    for (std::size_t y = 0; y < s.bob_settings(); ++y) {
      json blk = json::array();
      for (std::size_t a = 0; a < s.alice_outcomes[x]; ++a) {
        json line = json::array();
        for (std::size_t b = 0; b < s.bob_outcomes[y]; ++b) line.push_back(t(a, b, x, y));
        blk.push_back(std::move(line));
      }
      row.push_back(std::move(blk));
    }
    arr.push_back(std::move(row));
  }
  return arr;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

}  // namespace detail

/// Parses and validates (positivity, normalization, no-signaling).
inline Correlation correlation_from_json(const json& j) {
  if (!j.is_object() || !j.contains("scenario") || !j.contains("p")) {
    throw Error(ErrorKind::Parse, "correlation needs 'scenario' and 'p'");
  }
  Correlation c(scenario_from_json(j.at("scenario")));
  detail::fill_tensor(c, j.at("p"), "p");
  c.validate();
  return c;
}

inline json to_json(const Correlation& c) {
  return json{{"scenario", to_json(c.scenario())}, {"p", detail::tensor_to_json(c)}};
}

inline BellFunctional functional_from_json(const json& j) {
  if (!j.is_object() || !j.contains("scenario") || !j.contains("c")) {
    throw Error(ErrorKind::Parse, "functional needs 'scenario' and 'c'");
  }
  BellFunctional f(scenario_from_json(j.at("scenario")));
  detail::fill_tensor(f, j.at("c"), "c");
  return f;
}

inline json to_json(const BellFunctional& f) {
  return json{{"scenario", to_json(f.scenario())}, {"c", detail::tensor_to_json(f)}};
}

inline json to_json(const DeterministicStrategy& v) {
  return json{{"alice", v.alice_assignment}, {"bob", v.bob_assignment}};
}

/// Witness weights are written sparsely as [vertex index, weight] pairs.
inline json to_json(const DistanceReport& r) {
  json weights = json::array();
  for (const auto& [idx, w] : r.weights) weights.push_back(json::array({idx, w}));
  return json{{"distance", r.distance},
              {"normalized_distance", r.normalized_distance},
              {"lp_objective", r.lp_objective},
              {"status", to_string(r.status)},
              {"iterations", r.iterations},
              {"weights", std::move(weights)}};
}

namespace detail {

inline cplx complex_entry(const json& v) {
  if (v.is_number()) return cplx{v.get<double>(), 0.0};
  if (!v.is_array() || v.size() != 2) throw Error(ErrorKind::Parse, "complex entry must be [re, im]");
  return cplx{number(v[0], "real part"), number(v[1], "imaginary part")};
}

inline ComplexMatrix matrix_from_json(const json& m, std::size_t n) {
  std::vector<cplx> entries;
  entries.reserve(n * n);
  if (!m.is_array()) throw Error(ErrorKind::Parse, "outcome matrix must be an array");
  // n² entries means flat; n entries means rows. For n = 1 a row is a
  // one-element array.
  const bool flat = n == 1 ? !(m.size() == 1 && m[0].is_array() && m[0].size() == 1) : m.size() == n * n;
  if (flat) {
    if (m.size() != n * n) throw Error(ErrorKind::Parse, "flat outcome matrix must have dim^2 entries");
    for (const auto& v : m) entries.push_back(complex_entry(v));
  } else {
    if (m.size() != n) throw Error(ErrorKind::Parse, "outcome matrix must have dim rows");
    for (const auto& row : m) {
      if (!row.is_array() || row.size() != n) throw Error(ErrorKind::Parse, "outcome matrix row must have dim entries");
      for (const auto& v : row) entries.push_back(complex_entry(v));
    }
  }
  return ComplexMatrix(n, n, std::move(entries));
}

}  // namespace detail

/// Loads extra measurement settings; every POVM is validated.
inline std::vector<Povm> measurements_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("settings")) {
    throw Error(ErrorKind::Parse, "measurement file needs 'dim' and 'settings'");
  }
  if (!j.at("dim").is_number_integer() || j.at("dim").get<long long>() < 1) throw Error(ErrorKind::Parse, "'dim' must be a positive integer");
  const auto n = j.at("dim").get<std::size_t>();
  std::vector<Povm> out;
  for (const auto& setting : j.at("settings")) {
    if (!setting.contains("outcomes") || !setting.at("outcomes").is_array() || setting.at("outcomes").empty()) {
      throw Error(ErrorKind::Parse, "setting needs a non-empty 'outcomes' array");
    }
    std::vector<ComplexMatrix> effects;
    for (const auto& m : setting.at("outcomes")) effects.push_back(detail::matrix_from_json(m, n));
    Povm p(std::move(effects));
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

inline json to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(json::array({m(i, k).real(), m(i, k).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json measurements_to_json(const std::vector<Povm>& settings) {
  json arr = json::array();
  std::size_t n = settings.empty() ? 0 : settings.front().dim();
  for (const auto& p : settings) {
    json outs = json::array();
    for (const auto& e : p.effects()) outs.push_back(to_json(e));
    arr.push_back(json{{"outcomes", std::move(outs)}});
  }
  return json{{"dim", n}, {"settings", std::move(arr)}};
}

inline Correlation load_correlation(const std::string& path) { return correlation_from_json(detail::read_json_file(path)); }
inline BellFunctional load_functional(const std::string& path) { return functional_from_json(detail::read_json_file(path)); }
inline std::vector<Povm> load_measurements(const std::string& path) {
  return measurements_from_json(detail::read_json_file(path));
}

}  // namespace dikey
