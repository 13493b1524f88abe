#pragma once

// Deflator existence and construction: decides feasibility of the pointwise
// drift condition sigma theta + Gamma rho = a - r 1 and builds the deflator
// components (theta, rho, r) by minimal-norm solves on the grid.

#include "elmd/linalg.hpp"
#include "elmd/model.hpp"

#include <optional>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

namespace elmd::solver {

using linalg::Matrix;
using linalg::Tolerances;
using linalg::Vector;
using model::MarketSpec;
using model::ModifiedCharacteristics;

// (theta, rho, r) per grid step: market price of diffusion risk, jump risk
// premium per mark, virtual short rate.
struct DeflatorSpec {
  std::vector<Vector> theta;
  std::vector<Vector> rho;
  std::vector<double> rate;
};

struct FixedRate {
  double r = 0.0;
};
struct MinNorm {};

struct SolvePolicy {
  std::variant<FixedRate, MinNorm> mode = FixedRate{};
  double feasibility_margin = 1e-6;  // rho <= 1 - margin
};

enum class PointStatus { Feasible, Infeasible, MarginViolated };

struct PointReport {
  PointStatus status = PointStatus::Infeasible;
  double residual = 0.0;
  std::vector<int> violating_marks;
};

struct SolveReport {
  std::vector<PointReport> points;
  bool all_feasible() const {
    for (const auto& p : points) {
      if (p.status != PointStatus::Feasible) return false;
    }
    return !points.empty();
  }
};

struct ExistenceWitness {
  bool feasible = false;
  double residual = 0.0;
  Vector x;       // least-norm x of c_mod x = a - r 1
  double r = 0.0;
};

// Feasibility of c_mod x = a - r 1 with (x, r) both unknown, via the
// augmented system [c_mod | 1] (x, r) = a.
inline ExistenceWitness existence_check(const ModifiedCharacteristics& mc,
                                        const Tolerances& tol = {}) {
  const Eigen::Index d = mc.c_mod.dim();
  Matrix aug(d, d + 1);
  aug.leftCols(d) = mc.c_mod.m;
  aug.col(d) = Vector::Ones(d);
  const auto f = linalg::solvable(aug, mc.a, tol);
  ExistenceWitness w;
  w.feasible = f.feasible;
  w.residual = f.residual;
  if (f.feasible) {
    const Vector xr = linalg::pinv(aug, tol) * mc.a;
    w.x = xr.head(d);
    w.r = xr(d);
  }
  return w;
}

struct MprSolution {
  Vector theta;
  Vector rho;
  double r = 0.0;
  PointReport report;
};

// Single-point solve of the drift condition under the given policy.
// FixedRate: least-norm (theta, rho) with [sigma | Gamma] (theta, rho) = a - r 1.
// MinNorm: least-norm (theta, rho, r) over the augmented matrix [sigma | Gamma | 1].
inline MprSolution solve_mpr(const MarketSpec& spec, int k, const SolvePolicy& policy,
                             const Tolerances& tol = {}) {
  if (k < 0 || k >= spec.grid.steps()) {
    throw std::invalid_argument("solve_mpr: grid index out of range");
  }
  const int d = spec.d;
  const int m = spec.m;
  const int n = spec.jumps.n();
  const Matrix gam = model::gamma_matrix(spec, k);

  MprSolution sol;
  if (const auto* fixed = std::get_if<FixedRate>(&policy.mode)) {
    Matrix sys(d, m + n);
    sys.leftCols(m) = spec.sigma[k];
    sys.rightCols(n) = gam;
    const Vector rhs = spec.drift[k] - fixed->r * Vector::Ones(d);
    const auto f = linalg::solvable(sys, rhs, tol);
    sol.report.residual = f.residual;
    if (!f.feasible) {
      sol.report.status = PointStatus::Infeasible;
      return sol;
    }
    const Vector tr = linalg::pinv(sys, tol) * rhs;
    sol.theta = tr.head(m);
    sol.rho = tr.tail(n);
    sol.r = fixed->r;
  } else {
    Matrix sys(d, m + n + 1);
    sys.leftCols(m) = spec.sigma[k];
    sys.middleCols(m, n) = gam;
    sys.col(m + n) = Vector::Ones(d);
    const auto f = linalg::solvable(sys, spec.drift[k], tol);
    sol.report.residual = f.residual;
    if (!f.feasible) {
      sol.report.status = PointStatus::Infeasible;
      return sol;
    }
    const Vector trr = linalg::pinv(sys, tol) * spec.drift[k];
    sol.theta = trr.head(m);
    sol.rho = trr.segment(m, n);
    sol.r = trr(m + n);
  }

  sol.report.status = PointStatus::Feasible;
  for (int j = 0; j < n; ++j) {
    if (sol.rho(j) > 1.0 - policy.feasibility_margin) {
      sol.report.status = PointStatus::MarginViolated;
      sol.report.violating_marks.push_back(j);
    }
  }
  return sol;
}

// Grid-wide solve; feasible points populate the DeflatorSpec, failures are
// recorded in the report with zeroed entries.
inline std::pair<DeflatorSpec, SolveReport> solve_deflator(const MarketSpec& spec,
                                                           const SolvePolicy& policy,
                                                           const Tolerances& tol = {}) {
  DeflatorSpec defl;
  SolveReport report;
  const int n_steps = spec.grid.steps();
  for (int k = 0; k < n_steps; ++k) {
    MprSolution sol = solve_mpr(spec, k, policy, tol);
    report.points.push_back(sol.report);
    if (sol.report.status == PointStatus::Infeasible) {
      defl.theta.push_back(Vector::Zero(spec.m));
      defl.rho.push_back(Vector::Zero(spec.jumps.n()));
      defl.rate.push_back(0.0);
    } else {
      defl.theta.push_back(std::move(sol.theta));
      defl.rho.push_back(std::move(sol.rho));
      defl.rate.push_back(sol.r);
    }
  }
  return {std::move(defl), std::move(report)};
}

// a - r 1 - sigma theta - Gamma rho at t_k; zero iff the ELMD condition holds.
inline Vector drift_residual(const MarketSpec& spec, const DeflatorSpec& defl, int k) {
  if (k < 0 || k >= spec.grid.steps()) {
    throw std::invalid_argument("drift_residual: grid index out of range");
  }
  if (defl.theta[k].size() != spec.m || defl.rho[k].size() != spec.jumps.n()) {
    throw std::invalid_argument("drift_residual: deflator dimension mismatch");
  }
  return spec.drift[k] - defl.rate[k] * Vector::Ones(spec.d) -
         spec.sigma[k] * defl.theta[k] - model::gamma_matrix(spec, k) * defl.rho[k];
}

struct ElmnCoefficients {
  double drift = 0.0;       // r + |theta|^2 + <psi, psi/(1-psi)>
  Vector diffusion;         // theta
  Vector jump;              // psi/(1-psi) per mark
};

inline ElmnCoefficients elmn_coefficients(const DeflatorSpec& defl, const model::JumpMeasure& jm,
                                          int k) {
  const Vector& rho = defl.rho[k];
  if (rho.size() != jm.n()) {
    throw std::invalid_argument("elmn_coefficients: mark count mismatch");
  }
  ElmnCoefficients out;
  out.diffusion = defl.theta[k];
  out.jump = Vector::Zero(jm.n());
  double jump_drift = 0.0;
  for (int j = 0; j < jm.n(); ++j) {
    if (rho(j) >= 1.0) {
      throw std::domain_error("elmn_coefficients: rho must be < 1");
    }
    out.jump(j) = rho(j) / (1.0 - rho(j));
    jump_drift += jm.intensities[j] * rho(j) * rho(j) / (1.0 - rho(j));
  }
  out.drift = defl.rate[k] + defl.theta[k].squaredNorm() + jump_drift;
  return out;
}

struct GirsanovResult {
  MarketSpec spec;
  bool drift_condition_holds = true;  // false if the input was not drift-r
};

// Measure change induced by the deflator: drift becomes r 1, sigma and gamma
// are unchanged, intensities are thinned to (1 - rho_j) c_j.
inline GirsanovResult girsanov_transform(const MarketSpec& spec, const DeflatorSpec& defl,
                                         const Tolerances& tol = {}) {
  GirsanovResult out;
  out.spec = spec;
  const int n_steps = spec.grid.steps();
  for (int k = 0; k < n_steps; ++k) {
    const Vector& rho = defl.rho[k];
    for (int j = 0; j < spec.jumps.n(); ++j) {
      if (rho(j) >= 1.0) {
        throw std::domain_error("girsanov_transform: rho must be < 1");
      }
    }
    const Vector res = drift_residual(spec, defl, k);
    if (res.norm() > tol.feasibility_rel_tol * (1.0 + spec.drift[k].norm())) {
      out.drift_condition_holds = false;
    }
    out.spec.drift[k] = defl.rate[k] * Vector::Ones(spec.d);
  }
  // Thinned intensities must be constant over the grid for a single
  // JumpMeasure; piecewise-constant rho is applied per step below.
  if (spec.jumps.n() > 0) {
    for (int j = 0; j < spec.jumps.n(); ++j) {
      out.spec.jumps.intensities[j] = (1.0 - defl.rho[0](j)) * spec.jumps.intensities[j];
    }
    for (int k = 1; k < n_steps; ++k) {
      if ((defl.rho[k] - defl.rho[0]).norm() > 1e-12) {
        throw std::invalid_argument(
            "girsanov_transform: time-varying rho is not representable as a "
            "single thinned jump measure");
      }
    }
  }
  return out;
}

}  // namespace elmd::solver
