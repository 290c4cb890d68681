// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file cli.hpp
 * @brief Run configuration, subcommands and deterministic result files.
 *
 * Every CSV starts with a `#` metadata block (tool version, config hash,
 * seed, tolerances) followed by one header row. Numbers are written with 17
 * significant digits. Nothing time- or thread-dependent is written.
 */

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hubbard_phonon/boson_fock.hpp"
#include "hubbard_phonon/common.hpp"
#include "hubbard_phonon/eigensolver.hpp"
#include "hubbard_phonon/ir_limit.hpp"
#include "hubbard_phonon/ir_modes.hpp"
#include "hubbard_phonon/lang_firsov.hpp"
#include "hubbard_phonon/lattice_fermions.hpp"
#include "hubbard_phonon/magnetism.hpp"

namespace hubbard_phonon::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kInvalid = 2, kVerificationFailed = 3 };

/// Bad configuration or command line; maps to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

struct VerifySettings {
  double tol_transform_hb = 1e-6;
  double tol_transform_nb = 1e-6;
  double tol_annihilation = 1e-7;
  double tol_heisenberg = 1e-6;
  double tol_overlap = 1e-6;
  double tol_relative_bound = 1e-12;
  double tol_ccr = 1e-12;
  int heisenberg_n_max = 10;
  int nb_n_max = 0;  ///< 0: n_max + 4 (the ±α shifts reach further up the ladder)
  double heisenberg_t = 1.0;
  int random_f = 20;
  int relative_bound_trials = 100;
  int relative_bound_n_max = 4;
};

struct IrSettings {
  int samples = 5;
  std::vector<double> decay_grid{1e-4, 1e-3, 1e-2, 1e-1};
  double decay_alpha = 0.0;  ///< 0: use the coupling alpha
  int decay_n_e = 0;         ///< 0: use the first n_e
};

struct RunConfig {
  int n_sites = 0;
  HoppingMatrix hopping{1};
  bool tasaki = false;
  double t0 = 0.0;
  std::vector<double> t_x;
  bool include_diagonal = true;
  std::vector<int> n_e;
  double u = 0.0;
  std::vector<double> alpha;  ///< a single value unless a grid was given
  double beta = 0.5;
  double big_k = 1.0;
  std::vector<double> kappa;
  int modes_per_site = 2;
  int n_max = 8;
  double cluster_tol = 1e-8;
  double truncation_bound = 1e-8;
  std::string out_dir = "out";
  bool write_json = true;
  VerifySettings verify;
  IrSettings ir;
  json canonical;  ///< the parsed document, for hashing

  CutoffFamily family() const { return CutoffFamily{beta, big_k, n_sites}; }
  GroundSpaceOptions ground_options() const {
    GroundSpaceOptions o;
    o.cluster_tol = cluster_tol;
    return o;
  }
};

// ============================================================================
// Formatting
// ============================================================================

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.canonical.dump())));
  return std::string("fnv1a64:") + buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& meta,
            const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    for (const auto& [k, v] : meta) out_ << "# " << k << ": " << v << "\n";
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << escape(cells[i]);
    out_ << "\n";
  }

 private:
  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char c : s) r += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return r + "\"";
  }
  std::ofstream out_;
};

// ============================================================================
// Configuration
// ============================================================================

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing field " + where + "." + key);
  return j.at(key);
}

inline double number(const json& j, const std::string& name) {
  if (!j.is_number()) throw ConfigError(name + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(name + " must be finite");
  return v;
}

inline int integer(const json& j, const std::string& name) {
  if (!j.is_number_integer()) throw ConfigError(name + " must be an integer");
  return j.get<int>();
}

/// A number, a list of numbers, or {start, stop, step}.
inline std::vector<double> grid(const json& j, const std::string& name) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(number(j, name));
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(number(v, name + "[]"));
  } else if (j.is_object()) {
    const double a = number(require(j, "start", name), name + ".start");
    const double b = number(require(j, "stop", name), name + ".stop");
    const double s = number(require(j, "step", name), name + ".step");
    if (!(s > 0.0) || b < a) throw ConfigError(name + " needs step > 0 and stop >= start");
    const long n = std::lround((b - a) / s);
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * s);
  } else {
    throw ConfigError(name + " must be a number, a list or {start, stop, step}");
  }
  if (out.empty()) throw ConfigError(name + " is empty");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i] > out[i - 1])) throw ConfigError(name + " must be strictly ascending");
  return out;
}

}  // namespace detail

/// Parses and validates a configuration document. Every physical constraint
/// is checked here, before any computation.
inline RunConfig parse_config(const json& doc) {
  using namespace detail;
  RunConfig c;
  c.canonical = doc;
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");

  const json& lat = require(doc, "lattice", "config");
  c.n_sites = integer(require(lat, "n_sites", "lattice"), "lattice.n_sites");
  if (c.n_sites < 1 || c.n_sites > kMaxSites)
    throw ConfigError("lattice.n_sites must be in [1, " + std::to_string(kMaxSites) + "] (two spin orbitals per site in a 64-bit word)");
  const int kinds = lat.contains("hopping") + lat.contains("tasaki") + lat.contains("chain");
  if (kinds != 1) throw ConfigError("lattice needs exactly one of hopping, tasaki, chain");
  if (lat.contains("hopping")) {
    const json& h = lat.at("hopping");
    if (!h.is_array() || static_cast<int>(h.size()) != c.n_sites)
      throw ConfigError("lattice.hopping must be an n_sites x n_sites matrix");
    Eigen::MatrixXd m(c.n_sites, c.n_sites);
    for (int x = 0; x < c.n_sites; ++x) {
      if (!h[x].is_array() || static_cast<int>(h[x].size()) != c.n_sites)
        throw ConfigError("lattice.hopping must be an n_sites x n_sites matrix");
      for (int y = 0; y < c.n_sites; ++y) m(x, y) = number(h[x][y], "lattice.hopping");
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 0.0)
      throw ConfigError("lattice.hopping must be real symmetric (self-adjoint one-body term)");
    c.hopping = HoppingMatrix::from_dense(m);
  } else if (lat.contains("chain")) {
    const json& ch = lat.at("chain");
    const double t = number(require(ch, "t", "lattice.chain"), "lattice.chain.t");
    const bool periodic = ch.value("periodic", false);
    c.hopping = HoppingMatrix::chain(c.n_sites, t, periodic);
  } else {
    const json& ts = lat.at("tasaki");
    c.tasaki = true;
    c.t0 = number(require(ts, "t0", "lattice.tasaki"), "lattice.tasaki.t0");
    for (const auto& v : require(ts, "t_x", "lattice.tasaki")) c.t_x.push_back(number(v, "lattice.tasaki.t_x[]"));
    c.include_diagonal = ts.value("include_diagonal", true);
    if (!(c.t0 > 0.0)) throw ConfigError("lattice.tasaki.t0 must be > 0 (flat-band construction)");
    if (static_cast<int>(c.t_x.size()) != c.n_sites) throw ConfigError("lattice.tasaki.t_x needs one amplitude per site");
    for (double v : c.t_x)
      if (!(v > 0.0)) throw ConfigError("lattice.tasaki.t_x entries must be > 0 (flat-band construction)");
    c.hopping = build_tasaki_hopping(c.t0, c.t_x, c.include_diagonal);
  }

  const json& el = require(require(doc, "electrons", "config"), "n_e", "electrons");
  if (el.is_array()) {
    for (const auto& v : el) c.n_e.push_back(integer(v, "electrons.n_e[]"));
  } else {
    c.n_e.push_back(integer(el, "electrons.n_e"));
  }
  if (c.n_e.empty()) throw ConfigError("electrons.n_e is empty");
  for (int n : c.n_e)
    if (n < 0 || n > 2 * c.n_sites)
      throw ConfigError("electrons.n_e = " + std::to_string(n) + " violates 0 <= n_e <= 2*n_sites = " +
                        std::to_string(2 * c.n_sites) + " (Pauli exclusion: at most two electrons per site)");

  c.u = number(require(require(doc, "interaction", "config"), "u", "interaction"), "interaction.u");

  const json& cp = require(doc, "coupling", "config");
  if (cp.contains("alpha") == cp.contains("alpha_grid")) throw ConfigError("coupling needs exactly one of alpha, alpha_grid");
  c.alpha = cp.contains("alpha") ? std::vector<double>{number(cp.at("alpha"), "coupling.alpha")}
                                 : grid(cp.at("alpha_grid"), "coupling.alpha_grid");

  const json& ph = require(doc, "phonons", "config");
  c.beta = number(require(ph, "beta", "phonons"), "phonons.beta");
  c.big_k = number(require(ph, "big_k", "phonons"), "phonons.big_k");
  if (!(c.beta > 0.0)) throw ConfigError("phonons.beta must be > 0 (coupling profile k^beta square integrable at k = 0)");
  if (!(c.big_k > 0.0)) throw ConfigError("phonons.big_k must be > 0 (ultraviolet cutoff)");
  if (ph.contains("kappa") == ph.contains("kappa_grid")) throw ConfigError("phonons needs exactly one of kappa, kappa_grid");
  c.kappa = ph.contains("kappa") ? std::vector<double>{number(ph.at("kappa"), "phonons.kappa")}
                                 : grid(ph.at("kappa_grid"), "phonons.kappa_grid");
  for (double k : c.kappa)
    if (!(k > 0.0) || !(k < c.big_k))
      throw ConfigError("phonons.kappa must satisfy 0 < kappa < big_k (infrared cutoff inside the band)");
  c.modes_per_site = ph.contains("modes_per_site") ? integer(ph.at("modes_per_site"), "phonons.modes_per_site") : 2;
  c.n_max = ph.contains("n_max") ? integer(ph.at("n_max"), "phonons.n_max") : 8;
  if (c.modes_per_site < 2) throw ConfigError("phonons.modes_per_site must be >= 2");
  if (c.n_max < 3) throw ConfigError("phonons.n_max must be >= 3");

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    if (s.contains("cluster_tol")) c.cluster_tol = number(s.at("cluster_tol"), "solver.cluster_tol");
    if (s.contains("truncation_bound")) c.truncation_bound = number(s.at("truncation_bound"), "solver.truncation_bound");
    if (!(c.cluster_tol > 0.0) || !(c.truncation_bound > 0.0))
      throw ConfigError("solver tolerances must be > 0");
  }
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    if (o.contains("directory")) c.out_dir = o.at("directory").get<std::string>();
    if (o.contains("formats")) {
      c.write_json = false;
      for (const auto& f : o.at("formats")) {
        const std::string s = f.get<std::string>();
        if (s == "json") c.write_json = true;
        else if (s != "csv") throw ConfigError("output.formats entries must be csv or json");
      }
    }
  }
  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    auto num = [&](const char* k, double& dst) {
      if (v.contains(k)) dst = number(v.at(k), std::string("verify.") + k);
    };
    auto integ = [&](const char* k, int& dst) {
      if (v.contains(k)) dst = integer(v.at(k), std::string("verify.") + k);
    };
    num("tol_transform_hb", c.verify.tol_transform_hb);
    num("tol_transform_nb", c.verify.tol_transform_nb);
    num("tol_annihilation", c.verify.tol_annihilation);
    num("tol_heisenberg", c.verify.tol_heisenberg);
    num("tol_overlap", c.verify.tol_overlap);
    num("tol_relative_bound", c.verify.tol_relative_bound);
    num("tol_ccr", c.verify.tol_ccr);
    num("heisenberg_t", c.verify.heisenberg_t);
    integ("heisenberg_n_max", c.verify.heisenberg_n_max);
    integ("nb_n_max", c.verify.nb_n_max);
    integ("random_f", c.verify.random_f);
    integ("relative_bound_trials", c.verify.relative_bound_trials);
    integ("relative_bound_n_max", c.verify.relative_bound_n_max);
    if (c.verify.heisenberg_n_max < 3 || (c.verify.nb_n_max != 0 && c.verify.nb_n_max < 3) || c.verify.relative_bound_n_max < 1 || c.verify.random_f < 1)
      throw ConfigError("verify sizes out of range");
  }
  if (doc.contains("ir")) {
    const json& v = doc.at("ir");
    if (v.contains("samples")) c.ir.samples = integer(v.at("samples"), "ir.samples");
    if (v.contains("decay_grid")) c.ir.decay_grid = grid(v.at("decay_grid"), "ir.decay_grid");
    if (v.contains("decay_alpha")) c.ir.decay_alpha = number(v.at("decay_alpha"), "ir.decay_alpha");
    if (v.contains("decay_n_e")) c.ir.decay_n_e = integer(v.at("decay_n_e"), "ir.decay_n_e");
    for (double k : c.ir.decay_grid)
      if (!(k > 0.0) || !(k < c.big_k)) throw ConfigError("ir.decay_grid must lie in (0, big_k)");
    if (c.ir.decay_n_e < 0 || c.ir.decay_n_e > 2 * c.n_sites)
      throw ConfigError("ir.decay_n_e violates 0 <= n_e <= 2*n_sites (Pauli exclusion)");
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
}

// ============================================================================
// Shared run state
// ============================================================================

struct RunFlags {
  std::filesystem::path out;
  bool strict = false;
  int threads = 1;
  std::uint64_t seed = 1;
};

struct RunContext {
  const RunConfig& cfg;
  RunFlags flags;
  json summary = json::object();

  std::vector<std::pair<std::string, std::string>> meta(const std::string& sub,
                                                        std::vector<std::pair<std::string, std::string>> extra = {}) const {
    std::vector<std::pair<std::string, std::string>> m{{"tool", std::string("hubbard_phonon ") + kVersion},
                                                       {"subcommand", sub},
                                                       {"config_hash", config_hash(cfg)},
                                                       {"seed", std::to_string(flags.seed)},
                                                       {"cluster_tol", fmt(cfg.cluster_tol)},
                                                       {"truncation_bound", fmt(cfg.truncation_bound)}};
    for (auto& e : extra) m.push_back(std::move(e));
    return m;
  }
  std::filesystem::path path(const std::string& name) const { return flags.out / name; }

  void finish(const std::string& sub, int code) {
    summary["subcommand"] = sub;
    summary["tool_version"] = kVersion;
    summary["config_hash"] = config_hash(cfg);
    summary["seed"] = flags.seed;
    summary["exit_code"] = code;
    if (cfg.write_json) {
      std::ofstream o(path("summary.json"), std::ios::binary);
      o << summary.dump(2) << "\n";
    }
  }
};

namespace detail {

inline ModeVector random_mode_vector(int m, std::mt19937_64& rng, double scale = 0.5) {
  std::normal_distribution<double> g(0.0, scale);
  ModeVector f(m);
  for (int j = 0; j < m; ++j) {
    const double re = g(rng);
    const double im = g(rng);
    f(j) = Complex(re, im);
  }
  return f;
}

inline Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double re = g(rng);
      const double im = g(rng);
      a(i, j) = Complex(re, im);
    }
  return 0.5 * (a + a.adjoint());
}

inline LimitModel limit_model(const RunConfig& c, double alpha, int n_e) {
  LimitModel m;
  m.hopping = c.hopping;
  m.u = c.u;
  m.alpha = alpha;
  m.n_e = n_e;
  m.family = c.family();
  m.modes_per_site = c.modes_per_site;
  return m;
}

inline std::string status(bool ok) { return ok ? "pass" : "FAIL"; }

}  // namespace detail

// ============================================================================
// spectrum
// ============================================================================

/// Ground-space reports of Ĥ_e at b_κ and of the coupled H at n_max.
inline int run_spectrum(RunContext& ctx) {
  const RunConfig& c = ctx.cfg;
  CsvWriter csv(ctx.path("spectrum.csv"), ctx.meta("spectrum", {{"n_max", std::to_string(c.n_max)}}),
                {"n_e", "alpha", "kappa", "hamiltonian", "u_eff", "e0", "degeneracy", "gap", "s_tot", "classification",
                 "levels"});
  json rows = json::array();
  for (int n_e : c.n_e) {
    for (double kappa : c.kappa) {
      const Discretization d = discretize(c.family(), kappa, c.modes_per_site);
      const double b = b_kappa(c.family(), kappa);
      for (double alpha : c.alpha) {
        const EffectiveParams p = effective_params(c.u, alpha, b);
        const SectorBasis basis(c.n_sites, n_e);
        const SpinOperators spin = build_spin_operators(basis);
        const GroundSpaceReport re = ground_space(build_effective_hubbard(basis, c.hopping, p), c.ground_options(), &spin.s_squared);
        const CoupledModel cm = make_coupled_model(c.hopping, c.u, alpha, n_e, d, c.n_max);
        const RealSparse s2 = hubbard_phonon::detail::kron<double>(spin.s_squared, hubbard_phonon::detail::identity(cm.boson_dim()));
        const GroundSpaceReport rc = ground_space(build_direct_hamiltonian(cm), c.ground_options(), &s2);
        auto levels = [](const GroundSpaceReport& r) {
          std::string s;
          for (Eigen::Index i = 0; i < r.spectrum_head.size(); ++i) s += (i ? " " : "") + fmt(r.spectrum_head(i));
          return s;
        };
        const auto cls_e = classify(re, n_e, c.n_sites);
        const auto cls_c = classify(rc, n_e, c.n_sites);
        csv.row({std::to_string(n_e), fmt(alpha), fmt(kappa), "effective_electron", fmt(p.u_eff), fmt(re.e0),
                 std::to_string(re.degeneracy), fmt(re.gap), re.s_tot_str(), to_string(cls_e.value), levels(re)});
        csv.row({std::to_string(n_e), fmt(alpha), fmt(kappa), "coupled", fmt(p.u_eff), fmt(rc.e0),
                 std::to_string(rc.degeneracy), fmt(rc.gap), rc.s_tot_str(), to_string(cls_c.value), levels(rc)});
        rows.push_back({{"n_e", n_e}, {"alpha", alpha}, {"kappa", kappa}, {"u_eff", p.u_eff},
                        {"effective", {{"e0", re.e0}, {"degeneracy", re.degeneracy}, {"s_tot", re.s_tot_str()}}},
                        {"coupled", {{"e0", rc.e0}, {"degeneracy", rc.degeneracy}, {"s_tot", rc.s_tot_str()}}}});
      }
    }
  }
  ctx.summary["results"] = rows;
  return kOk;
}

// ============================================================================
// sweep
// ============================================================================

inline int run_sweep(RunContext& ctx) {
  const RunConfig& c = ctx.cfg;
  CsvWriter csv(ctx.path("sweep.csv"), ctx.meta("sweep"),
                {"alpha", "kappa", "u_eff", "e0", "degeneracy", "s_tot", "classification", "residual_flags"});
  CsvWriter flips(ctx.path("sweep_flips.csv"), ctx.meta("sweep"),
                  {"n_e", "kappa", "b_squared", "flips", "alpha_lo", "alpha_hi", "below", "above", "refined_lo",
                   "refined_hi", "alpha_c_predicted"});
  json out = json::array();
  int failures = 0;
  for (int n_e : c.n_e) {
    const SweepModel model{c.hopping, c.u, n_e};
    for (double kappa : c.kappa) {
      const double b = b_kappa(c.family(), kappa);
      const auto recs = sweep_alpha(model, c.alpha, b, kappa, c.ground_options(), ctx.flags.threads);
      for (const auto& r : recs) {
        failures += r.failed;
        csv.row({fmt(r.alpha), fmt(r.kappa), fmt(r.u_eff), r.failed ? "" : fmt(r.e0),
                 r.failed ? "" : std::to_string(r.degeneracy), r.s_tot, r.failed ? "" : to_string(r.classification),
                 r.residual_flags});
      }
      const FlipBracket br = find_flip(recs);
      const FlipBracket ref = refine_flip(model, br, b, kappa, 1e-6, c.ground_options());
      const double ac = critical_alpha(c.u, b);
      flips.row({std::to_string(n_e), fmt(kappa), fmt(b * b), std::to_string(br.flips), br.found ? fmt(br.lo) : "",
                 br.found ? fmt(br.hi) : "", br.found ? to_string(br.below) : "", br.found ? to_string(br.above) : "",
                 ref.found ? fmt(ref.lo) : "", ref.found ? fmt(ref.hi) : "", fmt(ac)});
      json j = {{"n_e", n_e}, {"kappa", kappa}, {"flips", br.flips}, {"alpha_c_predicted", ac}};
      if (br.found) {
        j["bracket"] = {br.lo, br.hi};
        j["refined"] = {ref.lo, ref.hi};
      }
      out.push_back(j);
    }
  }
  ctx.summary["flips"] = out;
  ctx.summary["failed_points"] = failures;
  if (failures) {
    std::cerr << "warning: " << failures << " sweep point(s) failed; see residual_flags\n";
    if (ctx.flags.strict) return kVerificationFailed;
  }
  return kOk;
}

// ============================================================================
// verify
// ============================================================================

struct CheckRow {
  std::string check;
  int n_e = 0;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string status;  ///< pass, FAIL or info
  std::string detail;
};

/// Identity suite on the configured model (first α and κ of the grids).
inline std::vector<CheckRow> verify_suite(const RunConfig& c, std::uint64_t seed) {
  const VerifySettings& v = c.verify;
  const double alpha = c.alpha.front();
  const double kappa = c.kappa.front();
  const Discretization d = discretize(c.family(), kappa, c.modes_per_site);
  std::vector<CheckRow> rows;
  auto add = [&](std::string name, int n_e, double r, double tol, std::string detail = "", bool info = false) {
    const bool ok = r <= tol;
    rows.push_back({std::move(name), n_e, r, tol, info ? "info" : detail::status(ok), std::move(detail)});
  };
  std::mt19937_64 rng(seed);

  // The full Fock space has 4^n_sites states; the algebra is site-count independent past a few sites.
  add("car", 0, car_residual(std::min(c.n_sites, 4)), 0.0, "sites=" + std::to_string(std::min(c.n_sites, 4)));
  {
    const TruncatedFock small(d.modes, std::min(c.n_max, 5));
    double w = 0.0;
    for (int k = 0; k < 5; ++k) {
      const ModeVector f = detail::random_mode_vector(d.mode_count(), rng);
      const ModeVector g = detail::random_mode_vector(d.mode_count(), rng);
      w = std::max(w, ccr_residual(small, f, g));
    }
    add("ccr", 0, w, v.tol_ccr);
  }
  {
    const TruncatedFock small(d.modes, v.relative_bound_n_max);
    double w = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < v.random_f; ++k)
      w = std::max(w, relative_bound_check(small, detail::random_mode_vector(d.mode_count(), rng), v.relative_bound_trials,
                                           seed + static_cast<std::uint64_t>(k)));
    add("relative_bound", 0, w, v.tol_relative_bound, "max of lhs - rhs");
  }

  for (int n_e : c.n_e) {
    const CoupledModel cm = make_coupled_model(c.hopping, c.u, alpha, n_e, d, c.n_max);
    {
      const TransformResidual r = verify_transform_Hb(cm);
      add("transform_hb", n_e, r.residual, v.tol_transform_hb, "n_max=" + std::to_string(c.n_max));
    }
    {
      const int nb_max = v.nb_n_max ? v.nb_n_max : c.n_max + 4;
      const NbTransformResult r = verify_transform_Nb(make_coupled_model(c.hopping, c.u, alpha, n_e, d, nb_max));
      add("transform_nb", n_e, r.residual_half, v.tol_transform_nb,
          "n_max=" + std::to_string(nb_max) + "; fitted c/alpha^2=" + fmt(r.fitted_over_alpha2()) + "; residual with c=alpha^2: " + fmt(r.residual_stated));
    }
    const LimitModel lm = detail::limit_model(c, alpha, n_e);
    const ElectronGround eg = electron_ground(lm, kappa, c.ground_options());
    const Eigen::VectorXcd psi_eg = eg.psi.cast<Complex>();
    {
      const DressedState ds = dress_state(cm, psi_eg, c.truncation_bound);
      double w = 0.0;
      for (int k = 0; k < v.random_f; ++k)
        w = std::max(w, annihilation_residual(cm, ds, detail::random_mode_vector(cm.mode_count(), rng)));
      add("annihilation", n_e, w, v.tol_annihilation,
          "dressed ground state; coherent tail " + fmt(ds.truncation_error));
    }
    {
      const CoupledModel hm = make_coupled_model(c.hopping, c.u, alpha, n_e, d, v.heisenberg_n_max);
      const ModeVector f = detail::random_mode_vector(hm.mode_count(), rng);
      const TransformCheckOptions o{2, seed, 2};
      add("heisenberg", n_e, heisenberg_evolution_check(hm, f, v.heisenberg_t, o), v.tol_heisenberg,
          "t=" + fmt(v.heisenberg_t) + " n_max=" + std::to_string(v.heisenberg_n_max));
      if (c.hopping.matrix().cwiseAbs().maxCoeff() > 0.0) {
        const CoupledModel h0 = make_coupled_model(HoppingMatrix(c.n_sites), c.u, alpha, n_e, d, v.heisenberg_n_max);
        add("heisenberg_without_hopping", n_e, heisenberg_evolution_check(h0, f, v.heisenberg_t, o), v.tol_heisenberg,
            "diagnostic: same model with T = 0", true);
      }
    }
    {
      // Reference configuration: largest ground-state weight, lowest index on ties.
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < psi_eg.size(); ++i)
        if (std::abs(psi_eg(i)) > std::abs(psi_eg(best)) + 1e-12) best = i;
      Eigen::VectorXcd psi_e = Eigen::VectorXcd::Zero(psi_eg.size());
      psi_e(best) = 1.0;
      std::vector<ModeVector> fs;
      for (int n = 0; n <= 2; ++n) {
        const OverlapResult r = overlap_formula(cm, fs, psi_e, psi_eg);
        const double rel = std::abs(r.numeric - *r.closed) / std::max(std::abs(*r.closed), 1e-300);
        add("overlap_n" + std::to_string(n), n_e, rel, v.tol_overlap,
            "|numeric|=" + fmt(std::abs(r.numeric)) + "; printed-form |.|=" + fmt(std::abs(*r.printed)));
        fs.push_back(detail::random_mode_vector(cm.mode_count(), rng));
      }
    }
  }
  return rows;
}

inline int run_verify(RunContext& ctx) {
  const RunConfig& c = ctx.cfg;
  const std::vector<CheckRow> rows = verify_suite(c, ctx.flags.seed);
  CsvWriter csv(ctx.path("verify.csv"),
                ctx.meta("verify", {{"alpha", fmt(c.alpha.front())}, {"kappa", fmt(c.kappa.front())},
                                    {"n_max", std::to_string(c.n_max)}}),
                {"check", "n_e", "residual", "tolerance", "status", "detail"});
  json checks = json::array();
  int failed = 0;
  for (const auto& r : rows) {
    csv.row({r.check, std::to_string(r.n_e), fmt(r.residual), fmt(r.tolerance), r.status, r.detail});
    checks.push_back({{"check", r.check}, {"n_e", r.n_e}, {"residual", r.residual}, {"tolerance", r.tolerance},
                      {"status", r.status}});
    failed += (r.status == "FAIL");
  }
  ctx.summary["checks"] = checks;
  ctx.summary["failed"] = failed;
  return failed ? kVerificationFailed : kOk;
}

// ============================================================================
// ir
// ============================================================================

inline int run_ir(RunContext& ctx) {
  const RunConfig& c = ctx.cfg;
  const double alpha = c.alpha.front();
  const int n_e = c.n_e.front();
  const LimitModel lm = detail::limit_model(c, alpha, n_e);

  // Norm table over the κ grid (needs three points for the rate fit).
  {
    CsvWriter csv(ctx.path("ir_norms.csv"), ctx.meta("ir"), {"kappa", "b_squared", "g_squared"});
    std::vector<double> grid = c.kappa;
    if (grid.size() < 3) grid = c.ir.decay_grid;
    const IRReport rep = ir_report(c.family(), grid);
    for (const auto& r : rep.rows) csv.row({fmt(r.kappa), fmt(r.b_squared), fmt(r.g_squared)});
    ctx.summary["ir_class"] = rep.cls == DivergenceClass::Regular       ? "regular"
                              : rep.cls == DivergenceClass::LogSingular ? "log_singular"
                                                                        : "power_singular";
    ctx.summary["rate_exponent"] = rep.rate_exponent;
    ctx.summary["log_coefficient"] = rep.log_coefficient;
  }
  // Vacuum-overlap decay.
  {
    LimitModel dm = lm;
    if (c.ir.decay_alpha != 0.0) dm.alpha = c.ir.decay_alpha;
    if (c.ir.decay_n_e != 0) dm.n_e = c.ir.decay_n_e;
    CsvWriter csv(ctx.path("ir_decay.csv"),
                  ctx.meta("ir", {{"alpha", fmt(dm.alpha)}, {"n_e", std::to_string(dm.n_e)}}),
                  {"kappa", "overlap", "normalized", "predicted"});
    for (const auto& r : overlap_decay_curve(dm, c.ir.decay_grid, c.ground_options()))
      csv.row({fmt(r.kappa), fmt(r.modulus), fmt(r.normalized), fmt(r.predicted)});
  }
  // Weyl-state convergence.
  int failed = 0;
  {
    CsvWriter csv(ctx.path("ir_weyl.csv"), ctx.meta("ir", {{"alpha", fmt(alpha)}, {"n_e", std::to_string(n_e)}}),
                  {"sample", "kappa", "value_re", "value_im", "limit_re", "limit_im", "deviation", "path_difference",
                   "monotone"});
    std::mt19937_64 rng(ctx.flags.seed);
    std::normal_distribution<double> g(0.0, 0.5);
    const SectorBasis basis(c.n_sites, n_e);
    json samples = json::array();
    for (int s = 0; s < c.ir.samples; ++s) {
      const Eigen::MatrixXcd a = detail::random_hermitian(static_cast<int>(basis.size()), rng);
      std::vector<Complex> ca, cb;
      for (int x = 0; x < c.n_sites; ++x) {
        const double r0 = g(rng), i0 = g(rng), r1 = g(rng), i1 = g(rng);
        ca.emplace_back(r0, i0);
        cb.emplace_back(r1, i1);
      }
      const double beta = c.beta;
      const SiteProfile f = [ca, cb, beta](int x, double k) { return std::pow(k, beta) * (ca[x] + cb[x] * k); };
      const LimitStateResult lim = limit_state(lm, a, f, c.ground_options());
      double prev = std::numeric_limits<double>::infinity();
      bool monotone = true;
      for (auto it = c.ir.decay_grid.rbegin(); it != c.ir.decay_grid.rend(); ++it) {
        const double kappa = *it;
        const WeylStateResult w = weyl_state(lm, kappa, a, f, c.ground_options());
        const double dev = std::abs(w.numeric - lim.value);
        const double diff = std::abs(w.numeric - w.closed);
        monotone = monotone && dev < prev;
        prev = dev;
        if (diff > c.verify.tol_overlap) ++failed;
        csv.row({std::to_string(s), fmt(kappa), fmt(w.numeric.real()), fmt(w.numeric.imag()), fmt(lim.value.real()),
                 fmt(lim.value.imag()), fmt(dev), fmt(diff), monotone ? "yes" : "no"});
      }
      samples.push_back({{"sample", s}, {"monotone", monotone}});
    }
    ctx.summary["weyl_samples"] = samples;
  }
  ctx.summary["failed"] = failed;
  return failed ? kVerificationFailed : kOk;
}

/// Runs a subcommand; maps errors to exit codes and writes summary.json.
inline int run(const std::string& sub, const std::filesystem::path& config, RunFlags flags, bool out_given) {
  RunConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const Error& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalid;
  }
  if (!out_given) flags.out = cfg.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(flags.out, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << flags.out << ": " << ec.message() << "\n";
    return kInvalid;
  }
  RunContext ctx{cfg, flags};
  int code = kOk;
  try {
    if (sub == "spectrum") code = run_spectrum(ctx);
    else if (sub == "sweep") code = run_sweep(ctx);
    else if (sub == "verify") code = run_verify(ctx);
    else if (sub == "ir") code = run_ir(ctx);
    else throw ConfigError("unknown subcommand " + sub);
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    code = kInvalid;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    code = kInvalid;
  } catch (const SizingError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    code = kInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    code = kInvalid;
  } catch (const Error& e) {
    std::cerr << "computation failed: " << e.what() << "\n";
    ctx.summary["error"] = e.what();
    code = kVerificationFailed;
  }
  ctx.finish(sub, code);
  return code;
}

}  // namespace hubbard_phonon::cli
