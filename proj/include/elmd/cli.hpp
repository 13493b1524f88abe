#pragma once

// Command dispatch and report emission. Reports are flat ordered key/value
// documents rendered as JSON or CSV; doubles are printed with 17 significant
// digits so repeated runs with the same seed are byte-identical.

#include "elmd/config.hpp"
#include "elmd/verify.hpp"

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace elmd::cli {

using config::RunConfig;

enum ExitCode { kPass = 0, kFailed = 1, kInputError = 2 };

struct CommandResult {
  int exit_code = kPass;
  std::string report;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Ordered flat report: dotted keys, values pre-rendered with a type tag so
// the JSON emitter knows what to quote.
struct Report {
  enum class Kind { Number, Bool, String };
  struct Entry {
    std::string key;
    std::string value;
    Kind kind;
  };
  std::vector<Entry> entries;

  void num(const std::string& key, double v) { entries.push_back({key, fmt(v), Kind::Number}); }
  void integer(const std::string& key, long v) {
    entries.push_back({key, std::to_string(v), Kind::Number});
  }
  void boolean(const std::string& key, bool v) {
    entries.push_back({key, v ? "true" : "false", Kind::Bool});
  }
  void text(const std::string& key, const std::string& v) {
    entries.push_back({key, v, Kind::String});
  }

  std::string render(const std::string& format) const {
    std::ostringstream out;
    if (format == "csv") {
      out << "key,value\n";
      for (const auto& e : entries) {
        std::string v = e.value;
        if (e.kind == Kind::String && v.find(',') != std::string::npos) {
          v = "\"" + v + "\"";
        }
        out << e.key << "," << v << "\n";
      }
    } else {
      out << "{\n";
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out << "  \"" << e.key << "\": ";
        if (e.kind == Kind::String) {
          out << "\"" << e.value << "\"";
        } else {
          out << e.value;
        }
        out << (i + 1 < entries.size() ? ",\n" : "\n");
      }
      out << "}\n";
    }
    return out.str();
  }
};

inline std::string point_key(int k, const std::string& field) {
  return "point." + std::to_string(k) + "." + field;
}

// Heston has state-dependent sigma; the pointwise solve is evaluated along
// simulated variance paths with the closed-form market price of risk.
inline CommandResult heston_residual_report(const RunConfig& cfg, const std::string& format) {
  const auto params = config::build_heston(cfg);
  const auto sim_cfg = config::build_sim_config(cfg);
  const auto paths = sim::simulate_heston_variance(params, sim_cfg);
  double max_residual = 0.0;
  for (int p = 0; p < sim_cfg.n_paths; ++p) {
    for (int k = 0; k <= sim_cfg.grid.steps(); ++k) {
      const double v = std::max(paths.variance[p](k), params.variance_floor);
      const double residual = params.a - params.r - std::sqrt(v) * paths.theta[p](k);
      max_residual = std::max(max_residual, std::abs(residual));
    }
  }
  const double tol = 1e-10;
  Report report;
  report.text("command", "heston_residual");
  report.integer("paths", sim_cfg.n_paths);
  report.num("max_drift_residual", max_residual);
  report.integer("variance_clamps", paths.clamp_count);
  report.boolean("pass", max_residual <= tol);
  return {max_residual <= tol ? kPass : kFailed, report.render(format)};
}

}  // namespace detail

inline CommandResult run_analyze(const RunConfig& cfg, const std::string& format = "json") {
  if (cfg.model.preset == "heston") return detail::heston_residual_report(cfg, format);
  const auto spec = config::build_market_spec(cfg);
  detail::Report report;
  report.text("command", "analyze");
  bool all_feasible = true;
  for (int k = 0; k < spec.grid.steps(); ++k) {
    const auto w = solver::existence_check(model::build_mod_char(spec, k));
    report.boolean(detail::point_key(k, "feasible"), w.feasible);
    report.num(detail::point_key(k, "residual"), w.residual);
    if (w.feasible) {
      report.num(detail::point_key(k, "witness_rate"), w.r);
      report.num(detail::point_key(k, "witness_norm"), w.x.norm());
    }
    all_feasible = all_feasible && w.feasible;
  }
  report.boolean("pass", all_feasible);
  return {all_feasible ? kPass : kFailed, report.render(format)};
}

inline CommandResult run_solve(const RunConfig& cfg, const std::string& format = "json") {
  const auto spec = config::build_market_spec(cfg);
  const auto policy = config::build_policy(cfg);
  const auto [defl, solve_report] = solver::solve_deflator(spec, policy);
  detail::Report report;
  report.text("command", "solve");
  for (int k = 0; k < spec.grid.steps(); ++k) {
    const auto& pt = solve_report.points[k];
    const char* status = pt.status == solver::PointStatus::Feasible      ? "feasible"
                         : pt.status == solver::PointStatus::Infeasible ? "infeasible"
                                                                        : "margin_violated";
    report.text(detail::point_key(k, "status"), status);
    report.num(detail::point_key(k, "residual"), pt.residual);
    report.num(detail::point_key(k, "rate"), defl.rate[k]);
    for (int c = 0; c < spec.m; ++c) {
      report.num(detail::point_key(k, "theta." + std::to_string(c)), defl.theta[k](c));
    }
    for (int j = 0; j < spec.jumps.n(); ++j) {
      report.num(detail::point_key(k, "rho." + std::to_string(j)), defl.rho[k](j));
    }
  }
  report.boolean("pass", solve_report.all_feasible());
  return {solve_report.all_feasible() ? kPass : kFailed, report.render(format)};
}

// Path dump: one row per (path, time, process); the asset column indexes the
// asset for process "asset" and is 0 for the scalar deflator processes.
inline CommandResult run_simulate(const RunConfig& cfg, const std::string& = "csv") {
  const auto spec = config::build_market_spec(cfg);
  const auto sim_cfg = config::build_sim_config(cfg);
  auto bundle = sim::simulate_market(spec, sim_cfg);
  const auto policy = config::build_policy(cfg);
  const auto [defl, solve_report] = solver::solve_deflator(spec, policy);
  const bool deflated = solve_report.all_feasible();
  if (deflated) {
    sim::simulate_deflator(defl, bundle);
    sim::simulate_elmn(bundle);
  }

  std::ostringstream out;
  out << "path,time,asset,value,process\n";
  auto row = [&](int p, double t, int asset, double value, const char* process) {
    out << p << "," << detail::fmt(t) << "," << asset << "," << detail::fmt(value) << ","
        << process << "\n";
  };
  for (int p = 0; p < bundle.n_paths(); ++p) {
    for (int k = 0; k <= bundle.steps(); ++k) {
      const double t = sim_cfg.grid.times[k];
      for (int i = 0; i < spec.d; ++i) row(p, t, i, bundle.assets[p](k, i), "asset");
      if (deflated) {
        row(p, t, 0, bundle.D[p](k), "D");
        row(p, t, 0, bundle.B(k), "B");
        row(p, t, 0, bundle.Z[p](k), "Z");
        row(p, t, 0, bundle.Zbar[p](k), "Zbar");
      }
    }
  }
  return {kPass, out.str()};
}

inline CommandResult run_verify(const RunConfig& cfg, const std::string& format = "json") {
  if (cfg.model.preset == "heston") return detail::heston_residual_report(cfg, format);
  const auto spec = config::build_market_spec(cfg);
  const auto policy = config::build_policy(cfg);
  const auto [defl, solve_report] = solver::solve_deflator(spec, policy);
  if (!solve_report.all_feasible()) {
    detail::Report report;
    report.text("command", "verify");
    report.text("error", "drift condition infeasible; no deflator to verify");
    report.boolean("pass", false);
    return {kFailed, report.render(format)};
  }
  const auto sim_cfg = config::build_sim_config(cfg);
  auto bundle = sim::simulate_market(spec, sim_cfg);
  sim::simulate_deflator(defl, bundle);
  sim::simulate_elmn(bundle);

  std::vector<double> checkpoints = cfg.verification.checkpoints;
  if (checkpoints.empty()) checkpoints = {cfg.simulation.horizon};
  const auto mart = verify::martingale_test(bundle, checkpoints, cfg.verification.k_sigma);
  const auto girs = verify::girsanov_test(bundle, checkpoints, cfg.verification.k_sigma);

  double max_inversion = 0.0;
  for (int p = 0; p < bundle.n_paths(); ++p) {
    for (int k = 0; k <= bundle.steps(); ++k) {
      max_inversion = std::max(max_inversion, std::abs(bundle.Zbar[p](k) * bundle.Z[p](k) - 1.0));
    }
  }
  const bool inversion_ok = max_inversion <= 1e-10;

  detail::Report report;
  report.text("command", "verify");
  report.integer("paths", bundle.n_paths());
  report.num("k_sigma", mart.k_sigma);
  for (std::size_t i = 0; i < mart.stats.size(); ++i) {
    const auto& st = mart.stats[i];
    const std::string base = "martingale." + std::to_string(i) + ".";
    report.num(base + "time", st.time);
    report.integer(base + "asset", st.asset);
    report.num(base + "mean", st.mean);
    report.num(base + "std_error", st.std_error);
    report.num(base + "target", st.target);
    report.num(base + "z_score", st.z_score);
    report.boolean(base + "pass", st.pass);
  }
  for (std::size_t i = 0; i < girs.checks.size(); ++i) {
    const auto& c = girs.checks[i];
    const std::string base = "girsanov." + std::to_string(i) + ".";
    report.text(base + "label", c.label);
    report.num(base + "time", c.time);
    report.num(base + "mean", c.mean);
    report.num(base + "std_error", c.std_error);
    report.num(base + "target", c.target);
    report.num(base + "z_score", c.z_score);
    report.boolean(base + "pass", c.pass);
  }
  report.num("elmn.max_inversion_error", max_inversion);
  report.boolean("elmn.pass", inversion_ok);
  report.text("caveat", mart.caveat);
  const bool pass = mart.pass && girs.pass && inversion_ok;
  report.boolean("pass", pass);
  return {pass ? kPass : kFailed, report.render(format)};
}

inline CommandResult run_hjm(const RunConfig& cfg, const std::string& format = "json") {
  std::vector<config::Vector> theta, rho;
  auto h = config::build_hjm_surface(cfg, &theta, &rho);

  double input_max = 0.0;
  for (std::size_t k = 0; k < h.eval_times.size(); ++k) {
    for (std::size_t l = 0; l < h.maturities.size(); ++l) {
      if (h.maturities[l] < h.eval_times[k]) continue;
      input_max = std::max(input_max, std::abs(termstruct::hjm_drift_residual(
                                          h, theta, rho, static_cast<int>(k),
                                          static_cast<int>(l))));
    }
  }

  const auto syn = termstruct::hjm_synthesize_alpha(h, theta, rho);
  auto closed = h;
  closed.alpha = syn.alpha;
  double closure_max = 0.0;
  for (std::size_t k = 0; k < h.eval_times.size(); ++k) {
    for (std::size_t l = 0; l < h.maturities.size(); ++l) {
      if (h.maturities[l] < h.eval_times[k]) continue;
      closure_max = std::max(closure_max, std::abs(termstruct::hjm_drift_residual(
                                              closed, theta, rho, static_cast<int>(k),
                                              static_cast<int>(l))));
    }
  }

  const double tol = 1e-6;
  detail::Report report;
  report.text("command", "hjm");
  report.num("input_max_residual", input_max);
  report.num("closure_max_residual", closure_max);
  for (std::size_t k = 0; k < h.eval_times.size(); ++k) {
    const std::string base = "skeleton." + std::to_string(k) + ".";
    report.num(base + "time", h.eval_times[k]);
    report.num(base + "short_rate", syn.short_rate[k]);
    report.num(base + "savings_account", syn.savings_account[k]);
  }
  report.boolean("pass", closure_max <= tol);
  return {closure_max <= tol ? kPass : kFailed, report.render(format)};
}

inline CommandResult run_bh(const RunConfig& cfg, const std::string& format = "json") {
  auto in = config::build_bh_family(cfg);
  if (in.synthesize) termstruct::bh_synthesize_alpha(in.family, in.theta, in.rho);
  const auto bh = termstruct::bh_check(in.family, in.theta, in.rho, in.r);

  detail::Report report;
  report.text("command", "bh");
  report.num("short_rate", in.r);
  report.num("density_at_zero", in.family.density.front());
  report.num("short_rate_residual", bh.short_rate_residual);
  report.num("max_drift_residual", bh.max_drift_residual);
  report.num("cons1", bh.cons1);
  for (int c = 0; c < in.family.m; ++c) {
    report.num("cons2." + std::to_string(c), bh.cons2(c));
  }
  for (int j = 0; j < in.family.jumps.n(); ++j) {
    report.num("cons3." + std::to_string(j), bh.cons3(j));
  }
  report.num("rho_zero_residual", bh.rho_zero_residual);
  report.boolean("pass", bh.pass);
  return {bh.pass ? kPass : kFailed, report.render(format)};
}

inline CommandResult run_command(const std::string& command, const RunConfig& cfg,
                                 const std::string& format = "json") {
  try {
    if (command == "analyze") return run_analyze(cfg, format);
    if (command == "solve") return run_solve(cfg, format);
    if (command == "simulate") return run_simulate(cfg, format);
    if (command == "verify") return run_verify(cfg, format);
    if (command == "hjm") return run_hjm(cfg, format);
    if (command == "bh") return run_bh(cfg, format);
  } catch (const config::ConfigError& e) {
    return {kInputError, std::string("error: ") + e.what() + "\n"};
  } catch (const std::invalid_argument& e) {
    return {kInputError, std::string("error: ") + e.what() + "\n"};
  } catch (const std::domain_error& e) {
    return {kInputError, std::string("error: ") + e.what() + "\n"};
  }
  return {kInputError, "error: unknown command '" + command + "'\n"};
}

}  // namespace elmd::cli
