#pragma once

// Run configuration: JSON ingestion with strict key checking, preset
// expansion into MarketSpec and term-structure inputs, and lossless
// serialization (parse(serialize(cfg)) == cfg).

#include "elmd/model.hpp"
#include "elmd/sim.hpp"
#include "elmd/solver.hpp"
#include "elmd/termstruct.hpp"

#include "json.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace elmd::config {

using json = nlohmann::json;
using linalg::Matrix;
using linalg::Vector;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(section + ": unknown key '" + key + "'");
    }
  }
}

inline const json& require(const json& j, const std::string& key, const std::string& section) {
  if (!j.contains(key)) throw ConfigError(section + ": missing key '" + key + "'");
  return j.at(key);
}

inline double num(const json& j, const std::string& key, const std::string& section) {
  const json& v = require(j, key, section);
  if (!v.is_number()) throw ConfigError(section + "." + key + ": expected a number");
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(key + ": expected a number");
  return j.at(key).get<double>();
}

inline long integer(const json& j, const std::string& key, const std::string& section) {
  const json& v = require(j, key, section);
  if (!v.is_number_integer()) throw ConfigError(section + "." + key + ": expected an integer");
  return v.get<long>();
}

inline std::vector<double> num_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace detail

struct ModelSection {
  std::string preset;  // black_scholes | heston | merton_discretized | bs_poisson | custom
  json params;         // preset-specific parameters, kept verbatim
};

struct DeflatorSection {
  std::string mode = "fixed_rate";  // fixed_rate | min_norm
  double rate = 0.0;
  double feasibility_margin = 1e-6;
};

struct SimulationSection {
  long paths = 1000;
  double horizon = 1.0;
  long steps = 20;
  std::uint64_t seed = 0;
};

struct VerificationSection {
  std::vector<double> checkpoints;
  double k_sigma = 4.0;
};

struct RunConfig {
  ModelSection model;
  DeflatorSection deflator;
  SimulationSection simulation;
  VerificationSection verification;
  std::optional<json> term_structure;

  bool operator==(const RunConfig& o) const {
    return model.preset == o.model.preset && model.params == o.model.params &&
           deflator.mode == o.deflator.mode && deflator.rate == o.deflator.rate &&
           deflator.feasibility_margin == o.deflator.feasibility_margin &&
           simulation.paths == o.simulation.paths && simulation.horizon == o.simulation.horizon &&
           simulation.steps == o.simulation.steps && simulation.seed == o.simulation.seed &&
           verification.checkpoints == o.verification.checkpoints &&
           verification.k_sigma == o.verification.k_sigma &&
           term_structure == o.term_structure;
  }
};

inline RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  detail::check_keys(doc, {"model", "deflator", "simulation", "verification", "term_structure"},
                     "config");

  RunConfig cfg;
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    if (!m.is_object() || !m.contains("preset") || !m.at("preset").is_string()) {
      throw ConfigError("model: missing preset name");
    }
    cfg.model.preset = m.at("preset").get<std::string>();
    static const std::set<std::string> presets{"black_scholes", "heston", "merton_discretized",
                                              "bs_poisson", "custom"};
    if (!presets.count(cfg.model.preset)) {
      throw ConfigError("model.preset: unknown preset '" + cfg.model.preset + "'");
    }
    cfg.model.params = m;
    cfg.model.params.erase("preset");
  }
  if (doc.contains("deflator")) {
    const json& d = doc.at("deflator");
    detail::check_keys(d, {"mode", "rate", "feasibility_margin"}, "deflator");
    if (d.contains("mode")) {
      cfg.deflator.mode = d.at("mode").get<std::string>();
      if (cfg.deflator.mode != "fixed_rate" && cfg.deflator.mode != "min_norm") {
        throw ConfigError("deflator.mode: must be fixed_rate or min_norm");
      }
    }
    cfg.deflator.rate = detail::num_or(d, "rate", 0.0);
    cfg.deflator.feasibility_margin = detail::num_or(d, "feasibility_margin", 1e-6);
    if (!(cfg.deflator.feasibility_margin > 0.0)) {
      throw ConfigError("deflator.feasibility_margin: must be positive");
    }
  }
  if (doc.contains("simulation")) {
    const json& s = doc.at("simulation");
    detail::check_keys(s, {"paths", "horizon", "steps", "seed"}, "simulation");
    if (s.contains("paths")) cfg.simulation.paths = detail::integer(s, "paths", "simulation");
    cfg.simulation.horizon = detail::num_or(s, "horizon", 1.0);
    if (s.contains("steps")) cfg.simulation.steps = detail::integer(s, "steps", "simulation");
    if (s.contains("seed")) {
      cfg.simulation.seed = static_cast<std::uint64_t>(detail::integer(s, "seed", "simulation"));
    }
    if (cfg.simulation.paths < 1) throw ConfigError("simulation.paths: must be >= 1");
    if (cfg.simulation.steps < 1) throw ConfigError("simulation.steps: must be >= 1");
    if (!(cfg.simulation.horizon > 0.0)) throw ConfigError("simulation.horizon: must be > 0");
  }
  if (doc.contains("verification")) {
    const json& v = doc.at("verification");
    detail::check_keys(v, {"checkpoints", "k_sigma"}, "verification");
    if (v.contains("checkpoints")) {
      cfg.verification.checkpoints =
          detail::num_array(v.at("checkpoints"), "verification.checkpoints");
    }
    cfg.verification.k_sigma = detail::num_or(v, "k_sigma", 4.0);
    if (!(cfg.verification.k_sigma > 0.0)) throw ConfigError("verification.k_sigma: must be > 0");
  }
  if (doc.contains("term_structure")) {
    cfg.term_structure = doc.at("term_structure");
  }
  return cfg;
}

inline json serialize_config(const RunConfig& cfg) {
  json doc = json::object();
  if (!cfg.model.preset.empty()) {
    json m = cfg.model.params;
    m["preset"] = cfg.model.preset;
    doc["model"] = m;
  }
  doc["deflator"] = {{"mode", cfg.deflator.mode},
                     {"rate", cfg.deflator.rate},
                     {"feasibility_margin", cfg.deflator.feasibility_margin}};
  doc["simulation"] = {{"paths", cfg.simulation.paths},
                       {"horizon", cfg.simulation.horizon},
                       {"steps", cfg.simulation.steps},
                       {"seed", static_cast<long>(cfg.simulation.seed)}};
  doc["verification"] = {{"checkpoints", cfg.verification.checkpoints},
                         {"k_sigma", cfg.verification.k_sigma}};
  if (cfg.term_structure) doc["term_structure"] = *cfg.term_structure;
  return doc;
}

// Expands the model section into a grid-ready MarketSpec. The heston preset
// is state-dependent and is not representable here; callers handle it
// separately via build_heston.
inline model::MarketSpec build_market_spec(const RunConfig& cfg) {
  const std::string& preset = cfg.model.preset;
  const json& p = cfg.model.params;
  if (preset.empty()) throw ConfigError("model: section is required for this command");
  if (preset == "heston") {
    throw ConfigError("model: the heston preset has state-dependent coefficients; "
                      "use the simulation entry points");
  }

  model::MarketSpec spec;
  spec.grid = model::TimeGrid::uniform(cfg.simulation.horizon,
                                       static_cast<int>(cfg.simulation.steps));
  const int n_steps = spec.grid.steps();

  auto fill_constant = [&](double a, double s, const std::vector<double>& marks,
                           const std::vector<double>& intensities,
                           const std::vector<double>& gammas, double s0) {
    spec.d = 1;
    spec.m = 1;
    spec.initial_prices = Vector::Constant(1, s0);
    spec.jumps.marks = marks;
    spec.jumps.intensities = intensities;
    Matrix g(1, static_cast<Eigen::Index>(gammas.size()));
    for (std::size_t j = 0; j < gammas.size(); ++j) g(0, static_cast<Eigen::Index>(j)) = gammas[j];
    for (int k = 0; k < n_steps; ++k) {
      spec.drift.push_back(Vector::Constant(1, a));
      spec.sigma.push_back(Matrix::Constant(1, 1, s));
      spec.gamma.push_back(g);
    }
  };

  if (preset == "black_scholes") {
    detail::check_keys(p, {"a", "sigma", "s0"}, "model");
    fill_constant(detail::num(p, "a", "model"), detail::num(p, "sigma", "model"), {}, {}, {},
                  detail::num(p, "s0", "model"));
  } else if (preset == "bs_poisson") {
    detail::check_keys(p, {"a", "sigma", "gamma", "intensity", "s0"}, "model");
    fill_constant(detail::num(p, "a", "model"), detail::num(p, "sigma", "model"),
                  {detail::num(p, "gamma", "model")}, {detail::num(p, "intensity", "model")},
                  {detail::num(p, "gamma", "model")}, detail::num(p, "s0", "model"));
  } else if (preset == "merton_discretized") {
    detail::check_keys(p, {"a", "sigma", "jump_mean", "jump_std", "nodes", "intensity", "s0"},
                       "model");
    const int nodes = static_cast<int>(detail::integer(p, "nodes", "model"));
    const auto jm = model::lognormal_jump_nodes(detail::num(p, "jump_mean", "model"),
                                                detail::num(p, "jump_std", "model"), nodes,
                                                detail::num(p, "intensity", "model"));
    fill_constant(detail::num(p, "a", "model"), detail::num(p, "sigma", "model"), jm.marks,
                  jm.intensities, jm.marks, detail::num(p, "s0", "model"));
  } else if (preset == "custom") {
    detail::check_keys(p, {"drift", "sigma", "gamma", "marks", "intensities", "s0"}, "model");
    const auto s0 = detail::num_array(detail::require(p, "s0", "model"), "model.s0");
    const auto drift = detail::num_array(detail::require(p, "drift", "model"), "model.drift");
    spec.d = static_cast<int>(drift.size());
    if (static_cast<int>(s0.size()) != spec.d) {
      throw ConfigError("model.s0: must have one entry per asset");
    }
    spec.initial_prices = detail::to_vector(s0);
    if (p.contains("marks")) {
      spec.jumps.marks = detail::num_array(p.at("marks"), "model.marks");
      spec.jumps.intensities =
          detail::num_array(detail::require(p, "intensities", "model"), "model.intensities");
    }
    const json& sig = detail::require(p, "sigma", "model");
    if (!sig.is_array() || static_cast<int>(sig.size()) != spec.d) {
      throw ConfigError("model.sigma: expected one row per asset");
    }
    Matrix sigma_mat;
    for (int i = 0; i < spec.d; ++i) {
      const auto row = detail::num_array(sig.at(i), "model.sigma");
      if (i == 0) {
        spec.m = static_cast<int>(row.size());
        sigma_mat = Matrix(spec.d, spec.m);
      } else if (static_cast<int>(row.size()) != spec.m) {
        throw ConfigError("model.sigma: ragged rows");
      }
      for (int c = 0; c < spec.m; ++c) sigma_mat(i, c) = row[c];
    }
    Matrix gamma_mat(spec.d, spec.jumps.n());
    if (spec.jumps.n() > 0) {
      const json& gam = detail::require(p, "gamma", "model");
      if (!gam.is_array() || static_cast<int>(gam.size()) != spec.d) {
        throw ConfigError("model.gamma: expected one row per asset");
      }
      for (int i = 0; i < spec.d; ++i) {
        const auto row = detail::num_array(gam.at(i), "model.gamma");
        if (static_cast<int>(row.size()) != spec.jumps.n()) {
          throw ConfigError("model.gamma: one column per mark required");
        }
        for (int j = 0; j < spec.jumps.n(); ++j) gamma_mat(i, j) = row[j];
      }
    }
    for (int k = 0; k < n_steps; ++k) {
      spec.drift.push_back(detail::to_vector(drift));
      spec.sigma.push_back(sigma_mat);
      spec.gamma.push_back(gamma_mat);
    }
  }

  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return spec;
}

inline sim::HestonParams build_heston(const RunConfig& cfg) {
  if (cfg.model.preset != "heston") throw ConfigError("model: heston preset required");
  const json& p = cfg.model.params;
  detail::check_keys(p, {"a", "r", "kappa", "vartheta", "xi", "v0", "variance_floor"}, "model");
  sim::HestonParams h;
  h.a = detail::num(p, "a", "model");
  h.r = detail::num(p, "r", "model");
  h.kappa = detail::num(p, "kappa", "model");
  h.vartheta = detail::num(p, "vartheta", "model");
  h.xi = detail::num(p, "xi", "model");
  h.v0 = detail::num(p, "v0", "model");
  h.variance_floor = detail::num_or(p, "variance_floor", 1e-8);
  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return h;
}

inline sim::SimConfig build_sim_config(const RunConfig& cfg) {
  sim::SimConfig out;
  out.n_paths = static_cast<int>(cfg.simulation.paths);
  out.grid = model::TimeGrid::uniform(cfg.simulation.horizon,
                                      static_cast<int>(cfg.simulation.steps));
  out.seed = cfg.simulation.seed;
  return out;
}

inline solver::SolvePolicy build_policy(const RunConfig& cfg) {
  solver::SolvePolicy policy;
  if (cfg.deflator.mode == "min_norm") {
    policy.mode = solver::MinNorm{};
  } else {
    policy.mode = solver::FixedRate{cfg.deflator.rate};
  }
  policy.feasibility_margin = cfg.deflator.feasibility_margin;
  return policy;
}

// Term-structure ingestion. The section must carry type: "hjm" or "bh".

inline termstruct::HjmSurface build_hjm_surface(const RunConfig& cfg,
                                                std::vector<Vector>* theta_out,
                                                std::vector<Vector>* rho_out) {
  if (!cfg.term_structure) throw ConfigError("term_structure: section is required");
  const json& t = *cfg.term_structure;
  detail::check_keys(t,
                     {"type", "maturities", "eval_times", "f0", "m", "marks", "intensities",
                      "alpha", "sigma", "gamma", "theta", "rho"},
                     "term_structure");
  if (detail::require(t, "type", "term_structure").get<std::string>() != "hjm") {
    throw ConfigError("term_structure.type: expected 'hjm'");
  }
  termstruct::HjmSurface h;
  h.maturities = detail::num_array(detail::require(t, "maturities", "term_structure"),
                                   "term_structure.maturities");
  h.eval_times = detail::num_array(detail::require(t, "eval_times", "term_structure"),
                                   "term_structure.eval_times");
  h.f0 = detail::num_array(detail::require(t, "f0", "term_structure"), "term_structure.f0");
  h.m = t.contains("m") ? static_cast<int>(detail::integer(t, "m", "term_structure")) : 1;
  if (t.contains("marks")) {
    h.jumps.marks = detail::num_array(t.at("marks"), "term_structure.marks");
    h.jumps.intensities = detail::num_array(
        detail::require(t, "intensities", "term_structure"), "term_structure.intensities");
  }
  const std::size_t nk = h.eval_times.size();
  const std::size_t nl = h.maturities.size();

  auto load_surface = [&](const char* key, int width) {
    const json& arr = detail::require(t, key, "term_structure");
    if (!arr.is_array() || arr.size() != nk) {
      throw ConfigError(std::string("term_structure.") + key +
                        ": expected one row per evaluation time");
    }
    std::vector<std::vector<Vector>> out(nk);
    for (std::size_t k = 0; k < nk; ++k) {
      if (!arr.at(k).is_array() || arr.at(k).size() != nl) {
        throw ConfigError(std::string("term_structure.") + key +
                          ": expected one entry per maturity");
      }
      for (std::size_t l = 0; l < nl; ++l) {
        const auto v = detail::num_array(arr.at(k).at(l), std::string("term_structure.") + key);
        if (static_cast<int>(v.size()) != width) {
          throw ConfigError(std::string("term_structure.") + key + ": wrong inner width");
        }
        out[k].push_back(detail::to_vector(v));
      }
    }
    return out;
  };

  h.sigma = load_surface("sigma", h.m);
  h.gamma = load_surface("gamma", h.jumps.n());
  const json& al = detail::require(t, "alpha", "term_structure");
  if (!al.is_array() || al.size() != nk) {
    throw ConfigError("term_structure.alpha: expected one row per evaluation time");
  }
  for (std::size_t k = 0; k < nk; ++k) {
    h.alpha.push_back(detail::num_array(al.at(k), "term_structure.alpha"));
  }

  auto load_per_time = [&](const char* key, int width) {
    std::vector<Vector> out;
    const json& arr = detail::require(t, key, "term_structure");
    if (!arr.is_array() || arr.size() != nk) {
      throw ConfigError(std::string("term_structure.") + key +
                        ": expected one entry per evaluation time");
    }
    for (std::size_t k = 0; k < nk; ++k) {
      const auto v = detail::num_array(arr.at(k), std::string("term_structure.") + key);
      if (static_cast<int>(v.size()) != width) {
        throw ConfigError(std::string("term_structure.") + key + ": wrong inner width");
      }
      out.push_back(detail::to_vector(v));
    }
    return out;
  };
  if (theta_out) *theta_out = load_per_time("theta", h.m);
  if (rho_out) *rho_out = load_per_time("rho", h.jumps.n());

  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("term_structure: ") + e.what());
  }
  return h;
}

struct BhInputs {
  termstruct::BhFamily family;
  Vector theta;
  Vector rho;
  double r = 0.0;
  bool synthesize = false;  // fill alpha_bar from (theta, rho) before checking
};

inline BhInputs build_bh_family(const RunConfig& cfg) {
  if (!cfg.term_structure) throw ConfigError("term_structure: section is required");
  const json& t = *cfg.term_structure;
  detail::check_keys(t,
                     {"type", "x_grid", "density", "m", "marks", "intensities", "alpha_bar",
                      "sigma_bar", "gamma_bar", "theta", "rho", "r", "synthesize", "quad_tol"},
                     "term_structure");
  if (detail::require(t, "type", "term_structure").get<std::string>() != "bh") {
    throw ConfigError("term_structure.type: expected 'bh'");
  }
  BhInputs in;
  auto& b = in.family;
  b.x_grid = detail::num_array(detail::require(t, "x_grid", "term_structure"),
                               "term_structure.x_grid");
  b.density = detail::num_array(detail::require(t, "density", "term_structure"),
                                "term_structure.density");
  b.m = t.contains("m") ? static_cast<int>(detail::integer(t, "m", "term_structure")) : 1;
  if (t.contains("marks")) {
    b.jumps.marks = detail::num_array(t.at("marks"), "term_structure.marks");
    b.jumps.intensities = detail::num_array(
        detail::require(t, "intensities", "term_structure"), "term_structure.intensities");
  }
  b.quad_tol = detail::num_or(t, "quad_tol", 1e-8);
  const std::size_t nl = b.x_grid.size();

  auto load_rows = [&](const char* key, int width) {
    std::vector<Vector> out;
    const json& arr = detail::require(t, key, "term_structure");
    if (!arr.is_array() || arr.size() != nl) {
      throw ConfigError(std::string("term_structure.") + key + ": expected one row per x node");
    }
    for (std::size_t l = 0; l < nl; ++l) {
      const auto v = detail::num_array(arr.at(l), std::string("term_structure.") + key);
      if (static_cast<int>(v.size()) != width) {
        throw ConfigError(std::string("term_structure.") + key + ": wrong inner width");
      }
      out.push_back(detail::to_vector(v));
    }
    return out;
  };
  b.sigma_bar = load_rows("sigma_bar", b.m);
  b.gamma_bar = load_rows("gamma_bar", b.jumps.n());

  in.synthesize = t.contains("synthesize") && t.at("synthesize").get<bool>();
  if (in.synthesize) {
    b.alpha_bar.assign(nl, 0.0);
  } else {
    b.alpha_bar = detail::num_array(detail::require(t, "alpha_bar", "term_structure"),
                                    "term_structure.alpha_bar");
  }

  const auto th = detail::num_array(detail::require(t, "theta", "term_structure"),
                                    "term_structure.theta");
  const auto rh = detail::num_array(detail::require(t, "rho", "term_structure"),
                                    "term_structure.rho");
  in.theta = detail::to_vector(th);
  in.rho = detail::to_vector(rh);
  in.r = t.contains("r") ? detail::num(t, "r", "term_structure")
                         : (b.density.empty() ? 0.0 : b.density.front());

  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("term_structure: ") + e.what());
  }
  return in;
}

}  // namespace elmd::config
