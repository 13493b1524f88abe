#pragma once

// Statistical verification: deflated prices have constant mean across paths
// (true-martingale test) and Girsanov density sanity checks.
//
// Caveat carried on all reports: the deflator property only requires local
// martingality; for models where S.Z is a strict local martingale the mean
// test will correctly detect mean decay and this is not a bug.

#include "elmd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace elmd::verify {

using linalg::Vector;
using sim::PathBundle;

inline constexpr const char* kLocalMartingaleCaveat =
    "the deflator property only requires local martingality; for models where "
    "S.Z is a strict local martingale the mean test will correctly detect "
    "mean decay and this is not a bug";

struct CheckpointStat {
  double time = 0.0;
  int asset = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double z_score = 0.0;
  bool pass = false;
};

struct MartingaleReport {
  std::vector<CheckpointStat> stats;
  double k_sigma = 4.0;
  bool pass = true;
  std::string caveat = kLocalMartingaleCaveat;
};

namespace detail {

inline int grid_index(const model::TimeGrid& grid, double t) {
  for (std::size_t k = 0; k < grid.times.size(); ++k) {
    if (std::abs(grid.times[k] - t) <= 1e-12 * (1.0 + std::abs(t))) {
      return static_cast<int>(k);
    }
  }
  throw std::invalid_argument("checkpoint time is not on the grid");
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <typename F>
MeanSe sample_mean_se(int n_paths, F value) {
  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    const double v = value(p);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n_paths;
  const double var = std::max(0.0, sum_sq / n_paths - mean * mean);
  return {mean, std::sqrt(var / n_paths)};
}

}  // namespace detail

// Sample mean of S^i_t Z_t vs S^i_0 at each checkpoint, pass at k_sigma.
inline MartingaleReport martingale_test(const PathBundle& bundle,
                                        const std::vector<double>& checkpoints,
                                        double k_sigma = 4.0) {
  if (!bundle.has_deflator) {
    throw std::invalid_argument("martingale_test: bundle lacks a deflator");
  }
  MartingaleReport report;
  report.k_sigma = k_sigma;
  for (double t : checkpoints) {
    const int k = detail::grid_index(bundle.cfg.grid, t);
    for (int i = 0; i < bundle.spec.d; ++i) {
      const auto ms = detail::sample_mean_se(bundle.n_paths(), [&](int p) {
        return bundle.assets[p](k, i) * bundle.Z[p](k);
      });
      CheckpointStat st;
      st.time = t;
      st.asset = i;
      st.mean = ms.mean;
      st.std_error = ms.se;
      st.target = bundle.spec.initial_prices(i);
      st.z_score = ms.se > 0.0 ? (ms.mean - st.target) / ms.se
                               : (ms.mean == st.target ? 0.0 : std::numeric_limits<double>::infinity());
      st.pass = std::abs(ms.mean - st.target) <= k_sigma * ms.se ||
                (ms.se == 0.0 && ms.mean == st.target);
      report.pass = report.pass && st.pass;
      report.stats.push_back(st);
    }
  }
  return report;
}

struct GirsanovCheck {
  std::string label;
  double time = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double z_score = 0.0;
  bool pass = false;
};

struct GirsanovReport {
  std::vector<GirsanovCheck> checks;
  double k_sigma = 4.0;
  bool pass = true;
};

// Density sanity checks under the candidate measure change:
//   mean(D_t) = 1, mean(D_t W'_t) = 0 with W' = W + int theta dt,
//   mean(D_t (N^j_t - c_j(1-rho_j) t)) = 0 per mark.
inline GirsanovReport girsanov_test(const PathBundle& bundle,
                                    const std::vector<double>& checkpoints,
                                    double k_sigma = 4.0) {
  if (!bundle.has_deflator) {
    throw std::invalid_argument("girsanov_test: bundle lacks a deflator");
  }
  const int m = bundle.spec.m;
  const int n = bundle.spec.jumps.n();
  GirsanovReport report;
  report.k_sigma = k_sigma;

  auto push = [&](std::string label, double t, detail::MeanSe ms, double target) {
    GirsanovCheck c;
    c.label = std::move(label);
    c.time = t;
    c.mean = ms.mean;
    c.std_error = ms.se;
    c.target = target;
    c.z_score = ms.se > 0.0 ? (ms.mean - target) / ms.se : 0.0;
    c.pass = std::abs(ms.mean - target) <= k_sigma * ms.se ||
             (ms.se == 0.0 && ms.mean == target);
    report.pass = report.pass && c.pass;
    report.checks.push_back(c);
  };

  for (double t : checkpoints) {
    const int k = detail::grid_index(bundle.cfg.grid, t);

    push("mean(D)", t,
         detail::sample_mean_se(bundle.n_paths(), [&](int p) { return bundle.D[p](k); }), 1.0);

    // deterministic drift correction int_0^t theta ds per component
    Vector theta_int = Vector::Zero(m);
    std::vector<double> comp_int(n, 0.0);
    for (int s = 0; s < k; ++s) {
      theta_int += bundle.defl.theta[s] * bundle.cfg.grid.dt(s);
      for (int j = 0; j < n; ++j) {
        comp_int[j] += bundle.spec.jumps.intensities[j] * (1.0 - bundle.defl.rho[s](j)) *
                       bundle.cfg.grid.dt(s);
      }
    }
    for (int l = 0; l < m; ++l) {
      push("mean(D.W'_" + std::to_string(l) + ")", t,
           detail::sample_mean_se(bundle.n_paths(),
                                  [&](int p) {
                                    double w = 0.0;
                                    for (int s = 0; s < k; ++s) w += bundle.dW[p](s, l);
                                    return bundle.D[p](k) * (w + theta_int(l));
                                  }),
           0.0);
    }
    for (int j = 0; j < n; ++j) {
      push("mean(D.(N_" + std::to_string(j) + " - c'(1-rho)t))", t,
           detail::sample_mean_se(bundle.n_paths(),
                                  [&](int p) {
                                    double cnt = 0.0;
                                    for (int s = 0; s < k; ++s) cnt += bundle.jump_counts[p](s, j);
                                    return bundle.D[p](k) * (cnt - comp_int[j]);
                                  }),
           0.0);
    }
  }
  return report;
}

}  // namespace elmd::verify
