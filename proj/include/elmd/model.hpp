#pragma once

// Market-model data types and the map from a market specification to the
// pointwise modified characteristics (a, c, v, c_mod, K).

#include "elmd/linalg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace elmd::model {

using linalg::FiniteKernel;
using linalg::Matrix;
using linalg::PsdMatrix;
using linalg::Tolerances;
using linalg::Vector;

// Finitely supported jump measure F = sum_j c_j delta_{x_j}.
struct JumpMeasure {
  std::vector<double> marks;
  std::vector<double> intensities;

  int n() const { return static_cast<int>(marks.size()); }

  void validate() const {
    if (marks.size() != intensities.size()) {
      throw std::invalid_argument("JumpMeasure: marks/intensities size mismatch");
    }
    for (std::size_t i = 0; i < marks.size(); ++i) {
      if (!std::isfinite(marks[i])) {
        throw std::invalid_argument("JumpMeasure: non-finite mark");
      }
      if (!(intensities[i] > 0.0) || !std::isfinite(intensities[i])) {
        throw std::invalid_argument("JumpMeasure: intensities must be positive and finite");
      }
      for (std::size_t j = i + 1; j < marks.size(); ++j) {
        if (marks[i] == marks[j]) {
          throw std::invalid_argument("JumpMeasure: marks must be pairwise distinct");
        }
      }
    }
  }
};

namespace detail {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Acklam's rational approximation of the standard normal quantile,
// refined by one Halley step.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

}  // namespace detail

// Discretizes a lognormal jump-size law (jump = e^Y - 1, Y ~ N(mu, s^2)) into
// n equal-probability nodes with conditional-mean marks, each carrying
// intensity total_intensity / n.
inline JumpMeasure lognormal_jump_nodes(double mu, double s, int n, double total_intensity) {
  if (n < 1 || !(s > 0.0) || !(total_intensity > 0.0)) {
    throw std::invalid_argument("lognormal_jump_nodes: invalid parameters");
  }
  JumpMeasure jm;
  jm.marks.reserve(n);
  jm.intensities.assign(n, total_intensity / n);
  const double mean_factor = std::exp(mu + 0.5 * s * s);
  double prev_z = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= n; ++i) {
    const double z = i == n ? std::numeric_limits<double>::infinity()
                            : detail::normal_quantile(static_cast<double>(i) / n);
    // E[e^Y | z_prev < (Y-mu)/s < z] via the shifted-normal identity.
    const double lo = std::isinf(prev_z) ? 0.0 : detail::normal_cdf(prev_z - s);
    const double hi = std::isinf(z) ? 1.0 : detail::normal_cdf(z - s);
    jm.marks.push_back(mean_factor * (hi - lo) * n - 1.0);
    prev_z = z;
  }
  return jm;
}

struct TimeGrid {
  std::vector<double> times;  // 0 = t_0 < t_1 < ... < t_N

  int steps() const { return static_cast<int>(times.size()) - 1; }
  double dt(int k) const { return times[k + 1] - times[k]; }

  void validate() const {
    if (times.empty() || times.front() != 0.0) {
      throw std::invalid_argument("TimeGrid: must start at 0");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (!(times[k] > times[k - 1])) {
        throw std::invalid_argument("TimeGrid: times must be strictly increasing");
      }
    }
  }

  static TimeGrid uniform(double horizon, int n_steps) {
    TimeGrid g;
    g.times.resize(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) g.times[k] = horizon * k / n_steps;
    g.times[0] = 0.0;
    return g;
  }
};

// A d-asset jump-diffusion market with piecewise-constant coefficients on a
// time grid (left endpoint rule): drift a, diffusion sigma (d x m), jump
// coefficients gamma (d x n, entry (i,j) = gamma^i at mark x_j).
struct MarketSpec {
  int d = 0;
  int m = 0;
  JumpMeasure jumps;
  Vector initial_prices;         // S_0, all > 0
  TimeGrid grid;
  std::vector<Vector> drift;     // a(t_k), one per grid step
  std::vector<Matrix> sigma;     // sigma(t_k), d x m
  std::vector<Matrix> gamma;     // gamma(t_k), d x n

  void validate() const {
    jumps.validate();
    grid.validate();
    if (initial_prices.size() != d) {
      throw std::invalid_argument("MarketSpec: initial price dimension mismatch");
    }
    if (initial_prices.minCoeff() <= 0.0) {
      throw std::invalid_argument("MarketSpec: initial prices must be positive");
    }
    const std::size_t n_steps = static_cast<std::size_t>(grid.steps());
    if (drift.size() != n_steps || sigma.size() != n_steps || gamma.size() != n_steps) {
      throw std::invalid_argument("MarketSpec: coefficient schedule length mismatch");
    }
    for (std::size_t k = 0; k < n_steps; ++k) {
      if (drift[k].size() != d || sigma[k].rows() != d || sigma[k].cols() != m ||
          gamma[k].rows() != d || gamma[k].cols() != jumps.n()) {
        throw std::invalid_argument("MarketSpec: coefficient dimension mismatch");
      }
      linalg::require_finite(sigma[k], "MarketSpec sigma");
      linalg::require_finite(gamma[k], "MarketSpec gamma");
      if (!drift[k].allFinite()) {
        throw std::invalid_argument("MarketSpec: non-finite drift");
      }
      if (gamma[k].size() > 0 && gamma[k].minCoeff() <= -1.0) {
        throw std::invalid_argument("MarketSpec: jump coefficient must exceed -1");
      }
    }
  }
};

// Pointwise data of the existence equation c_mod x = a - r 1.
struct ModifiedCharacteristics {
  Vector a;
  PsdMatrix c;      // continuous part, sigma sigma^T
  PsdMatrix v;      // purely discontinuous part, second moments of K
  PsdMatrix c_mod;  // c + v
  FiniteKernel kernel;
};

// Gamma matrix of the finite-jump drift condition, entry (i,j) = c_j gamma^i(x_j).
inline Matrix gamma_matrix(const MarketSpec& spec, int k) {
  if (k < 0 || k >= spec.grid.steps()) {
    throw std::invalid_argument("gamma_matrix: grid index out of range");
  }
  Matrix g = spec.gamma[k];
  for (int j = 0; j < spec.jumps.n(); ++j) {
    g.col(j) *= spec.jumps.intensities[j];
  }
  return g;
}

inline ModifiedCharacteristics build_mod_char(const MarketSpec& spec, int k) {
  if (k < 0 || k >= spec.grid.steps()) {
    throw std::invalid_argument("build_mod_char: grid index out of range");
  }
  const int d = spec.d;
  const int n = spec.jumps.n();

  std::vector<Vector> sigma_rows;
  sigma_rows.reserve(d);
  for (int i = 0; i < d; ++i) sigma_rows.push_back(spec.sigma[k].row(i).transpose());
  PsdMatrix c = linalg::gram(sigma_rows);

  // K is the image of the marks under gamma, weighted by the intensities;
  // marks mapped to zero are dropped (K({0}) = 0).
  FiniteKernel kernel;
  Matrix v_mat = Matrix::Zero(d, d);
  for (int j = 0; j < n; ++j) {
    Vector image = spec.gamma[k].col(j);
    v_mat += spec.jumps.intensities[j] * image * image.transpose();
    if (!image.isZero(0.0)) {
      kernel.points.push_back(std::move(image));
      kernel.weights.push_back(spec.jumps.intensities[j]);
    }
  }

  ModifiedCharacteristics mc;
  mc.a = spec.drift[k];
  mc.c = std::move(c);
  mc.v.m = v_mat;
  mc.c_mod.m = mc.c.m + v_mat;
  mc.kernel = std::move(kernel);
  return mc;
}

}  // namespace elmd::model
