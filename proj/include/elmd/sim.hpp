#pragma once

// Reproducible path simulation of the market, the deflator Z = D/B and the
// ELMN Z-bar. Stepping is exact for piecewise-constant coefficients: each
// step multiplies by a closed-form stochastic-exponential factor.

#include "elmd/model.hpp"
#include "elmd/solver.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace elmd::sim {

using linalg::Matrix;
using linalg::Vector;
using model::MarketSpec;
using model::TimeGrid;
using solver::DeflatorSpec;

struct SimConfig {
  int n_paths = 1;
  TimeGrid grid;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
    grid.validate();
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e9b5ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-path stream: the path index is mixed into the master seed, so paths
// are independent of each other and of the order they are generated in.
inline std::mt19937_64 path_engine(std::uint64_t master_seed, std::uint64_t path_index) {
  return std::mt19937_64(splitmix64(master_seed ^ splitmix64(path_index)));
}

}  // namespace detail

// Per-path simulation output. Driving noise (Wiener increments and per-mark
// jump counts) is stored so the deflator and ELMN reuse the same draws.
struct PathBundle {
  MarketSpec spec;
  SimConfig cfg;

  // per path: steps x m Wiener increments, steps x n jump counts
  std::vector<Matrix> dW;
  std::vector<Matrix> jump_counts;
  // per path: (steps+1) x d asset values
  std::vector<Matrix> assets;
  // deflator data, filled by simulate_deflator
  DeflatorSpec defl;
  bool has_deflator = false;
  std::vector<Vector> D;     // per path, length steps+1
  Vector B;                  // deterministic, length steps+1
  std::vector<Vector> Z;     // D / B
  bool has_elmn = false;
  std::vector<Vector> Zbar;  // inverse deflator

  int n_paths() const { return cfg.n_paths; }
  int steps() const { return cfg.grid.steps(); }
};

inline PathBundle simulate_market(const MarketSpec& spec, const SimConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (spec.grid.times != cfg.grid.times) {
    throw std::invalid_argument("simulate_market: spec and config grids differ");
  }
  const int d = spec.d;
  const int m = spec.m;
  const int n = spec.jumps.n();
  const int steps = cfg.grid.steps();

  PathBundle bundle;
  bundle.spec = spec;
  bundle.cfg = cfg;
  bundle.dW.resize(cfg.n_paths);
  bundle.jump_counts.resize(cfg.n_paths);
  bundle.assets.resize(cfg.n_paths);

  for (int p = 0; p < cfg.n_paths; ++p) {
    auto rng = detail::path_engine(cfg.seed, static_cast<std::uint64_t>(p));
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix dw(steps, m);
    Matrix counts(steps, n);
    Matrix s(steps + 1, d);
    s.row(0) = spec.initial_prices.transpose();

    for (int k = 0; k < steps; ++k) {
      const double dt = cfg.grid.dt(k);
      const double sqrt_dt = std::sqrt(dt);
      for (int l = 0; l < m; ++l) dw(k, l) = sqrt_dt * gauss(rng);
      for (int j = 0; j < n; ++j) {
        std::poisson_distribution<int> pois(spec.jumps.intensities[j] * dt);
        counts(k, j) = static_cast<double>(pois(rng));
      }
      for (int i = 0; i < d; ++i) {
        // exact per-step stochastic exponential: the continuous part of X^i
        // carries the jump compensator -sum_j c_j gamma^i_j dt
        double comp = 0.0;
        for (int j = 0; j < n; ++j) {
          comp += spec.jumps.intensities[j] * spec.gamma[k](i, j);
        }
        const double diffusion = spec.sigma[k].row(i).dot(dw.row(k));
        const double log_factor =
            diffusion +
            (spec.drift[k](i) - comp - 0.5 * spec.sigma[k].row(i).squaredNorm()) * dt;
        double jump_factor = 1.0;
        for (int j = 0; j < n; ++j) {
          const int cnt = static_cast<int>(counts(k, j));
          for (int e = 0; e < cnt; ++e) jump_factor *= 1.0 + spec.gamma[k](i, j);
        }
        s(k + 1, i) = s(k, i) * std::exp(log_factor) * jump_factor;
      }
    }
    bundle.dW[p] = std::move(dw);
    bundle.jump_counts[p] = std::move(counts);
    bundle.assets[p] = std::move(s);
  }
  return bundle;
}

// Steps D = E(-theta.W - psi*(p-q)), B = exp(int r dt), Z = D/B on the
// bundle's driving noise.
inline void simulate_deflator(const DeflatorSpec& defl, PathBundle& bundle) {
  const int m = bundle.spec.m;
  const int n = bundle.spec.jumps.n();
  const int steps = bundle.steps();
  if (static_cast<int>(defl.theta.size()) != steps) {
    throw std::invalid_argument("simulate_deflator: deflator grid mismatch");
  }
  for (int k = 0; k < steps; ++k) {
    if (defl.theta[k].size() != m || defl.rho[k].size() != n) {
      throw std::invalid_argument("simulate_deflator: deflator dimension mismatch");
    }
    for (int j = 0; j < n; ++j) {
      if (defl.rho[k](j) >= 1.0) {
        throw std::domain_error("simulate_deflator: rho must be < 1");
      }
    }
  }

  bundle.defl = defl;
  bundle.has_deflator = true;
  bundle.B.resize(steps + 1);
  bundle.B(0) = 1.0;
  for (int k = 0; k < steps; ++k) {
    bundle.B(k + 1) = bundle.B(k) * std::exp(defl.rate[k] * bundle.cfg.grid.dt(k));
  }

  bundle.D.assign(bundle.n_paths(), Vector());
  bundle.Z.assign(bundle.n_paths(), Vector());
  for (int p = 0; p < bundle.n_paths(); ++p) {
    Vector dpath(steps + 1);
    dpath(0) = 1.0;
    for (int k = 0; k < steps; ++k) {
      const double dt = bundle.cfg.grid.dt(k);
      double comp = 0.0;
      for (int j = 0; j < n; ++j) {
        comp += bundle.spec.jumps.intensities[j] * defl.rho[k](j);
      }
      const double log_factor = -defl.theta[k].dot(bundle.dW[p].row(k)) -
                                0.5 * defl.theta[k].squaredNorm() * dt + comp * dt;
      double jump_factor = 1.0;
      for (int j = 0; j < n; ++j) {
        const int cnt = static_cast<int>(bundle.jump_counts[p](k, j));
        for (int e = 0; e < cnt; ++e) jump_factor *= 1.0 - defl.rho[k](j);
      }
      dpath(k + 1) = dpath(k) * std::exp(log_factor) * jump_factor;
    }
    bundle.Z[p] = dpath.cwiseQuotient(bundle.B);
    bundle.D[p] = std::move(dpath);
  }
}

// Steps the ELMN Z-bar = 1/Z from its own dynamics on the same noise.
inline void simulate_elmn(PathBundle& bundle) {
  if (!bundle.has_deflator) {
    throw std::invalid_argument("simulate_elmn: run simulate_deflator first");
  }
  const int n = bundle.spec.jumps.n();
  const int steps = bundle.steps();
  bundle.Zbar.assign(bundle.n_paths(), Vector());
  bundle.has_elmn = true;
  for (int p = 0; p < bundle.n_paths(); ++p) {
    Vector zb(steps + 1);
    zb(0) = 1.0;
    for (int k = 0; k < steps; ++k) {
      const double dt = bundle.cfg.grid.dt(k);
      const auto coef = solver::elmn_coefficients(bundle.defl, bundle.spec.jumps, k);
      double comp = 0.0;
      for (int j = 0; j < n; ++j) {
        comp += bundle.spec.jumps.intensities[j] * coef.jump(j);
      }
      const double log_factor = coef.diffusion.dot(bundle.dW[p].row(k)) -
                                0.5 * coef.diffusion.squaredNorm() * dt +
                                (coef.drift - comp) * dt;
      double jump_factor = 1.0;
      for (int j = 0; j < n; ++j) {
        const int cnt = static_cast<int>(bundle.jump_counts[p](k, j));
        for (int e = 0; e < cnt; ++e) jump_factor *= 1.0 + coef.jump(j);
      }
      zb(k + 1) = zb(k) * std::exp(log_factor) * jump_factor;
    }
    bundle.Zbar[p] = std::move(zb);
  }
}

// Heston preset: CIR variance with full truncation, pathwise market price of
// risk theta_t = (a - r) / sqrt(v_t). Requires the Feller condition
// 2 kappa vartheta > xi^2.
struct HestonParams {
  double a = 0.1;
  double r = 0.02;
  double kappa = 2.0;
  double vartheta = 0.09;  // long-run variance
  double xi = 0.3;
  double v0 = 0.09;
  double variance_floor = 1e-8;

  void validate() const {
    if (!(2.0 * kappa * vartheta > xi * xi)) {
      throw std::invalid_argument("HestonParams: Feller condition 2 kappa vartheta > xi^2");
    }
    if (!(v0 > 0.0) || !(kappa > 0.0) || !(vartheta > 0.0) || !(xi > 0.0)) {
      throw std::invalid_argument("HestonParams: parameters must be positive");
    }
  }
};

struct HestonPaths {
  std::vector<Vector> variance;  // per path, length steps+1
  std::vector<Vector> theta;     // per path, length steps+1, (a-r)/sqrt(v)
  long clamp_count = 0;          // times the variance floor was applied
};

inline HestonPaths simulate_heston_variance(const HestonParams& params, const SimConfig& cfg) {
  params.validate();
  cfg.validate();
  const int steps = cfg.grid.steps();
  HestonPaths out;
  out.variance.resize(cfg.n_paths);
  out.theta.resize(cfg.n_paths);
  for (int p = 0; p < cfg.n_paths; ++p) {
    auto rng = detail::path_engine(cfg.seed, static_cast<std::uint64_t>(p));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(steps + 1), th(steps + 1);
    v(0) = params.v0;
    double v_trunc = params.v0;
    for (int k = 0; k < steps; ++k) {
      const double dt = cfg.grid.dt(k);
      // full truncation: drift and diffusion use v^+ of the unclamped state
      const double vp = std::max(v_trunc, 0.0);
      v_trunc = v_trunc + params.kappa * (params.vartheta - vp) * dt +
                params.xi * std::sqrt(vp) * std::sqrt(dt) * gauss(rng);
      v(k + 1) = std::max(v_trunc, 0.0);
    }
    for (int k = 0; k <= steps; ++k) {
      double vv = v(k);
      if (vv < params.variance_floor) {
        vv = params.variance_floor;
        ++out.clamp_count;
      }
      th(k) = (params.a - params.r) / std::sqrt(vv);
    }
    out.variance[p] = std::move(v);
    out.theta[p] = std::move(th);
  }
  return out;
}

}  // namespace elmd::sim
