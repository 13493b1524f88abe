#pragma once

// HJM and Brody-Hughston drift-condition checkers and synthesizers on
// maturity grids. All maturity and x integrals use trapezoidal quadrature on
// the user grid (second-order accurate for smooth inputs).

#include "elmd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace elmd::termstruct {

using linalg::Vector;
using model::JumpMeasure;

namespace detail {

// Integral of the piecewise-linear interpolant of (grid, values) over
// [from, to]; from and to may fall between nodes.
inline double trap_integral(const std::vector<double>& grid, const std::vector<double>& values,
                            double from, double to) {
  if (grid.size() != values.size() || grid.size() < 2) {
    throw std::invalid_argument("trap_integral: bad grid");
  }
  if (from < grid.front() - 1e-12 || to > grid.back() + 1e-12 || from > to + 1e-12) {
    throw std::invalid_argument("trap_integral: range outside grid");
  }
  auto interp = [&](double x) {
    if (x <= grid.front()) return values.front();
    if (x >= grid.back()) return values.back();
    std::size_t hi = 1;
    while (grid[hi] < x) ++hi;
    const double w = (x - grid[hi - 1]) / (grid[hi] - grid[hi - 1]);
    return (1.0 - w) * values[hi - 1] + w * values[hi];
  };
  double total = 0.0;
  double x0 = from;
  double v0 = interp(from);
  for (std::size_t l = 0; l < grid.size(); ++l) {
    if (grid[l] <= from) continue;
    const double x1 = std::min(grid[l], to);
    const double v1 = interp(x1);
    total += 0.5 * (v0 + v1) * (x1 - x0);
    x0 = x1;
    v0 = v1;
    if (grid[l] >= to) break;
  }
  if (x0 < to) total += 0.5 * (v0 + interp(to)) * (to - x0);
  return total;
}

}  // namespace detail

// Forward-rate surface on a maturity grid: coefficient arrays are indexed
// [evaluation time k][maturity l], sigma carries m factors and gamma one
// column per jump mark.
struct HjmSurface {
  std::vector<double> maturities;   // T_0 < ... < T_M
  std::vector<double> eval_times;   // t_k, each within [T_0, T_M]
  int m = 1;
  JumpMeasure jumps;
  std::vector<double> f0;                          // initial forward curve, per maturity
  std::vector<std::vector<double>> alpha;          // [k][l]
  std::vector<std::vector<Vector>> sigma;          // [k][l], R^m
  std::vector<std::vector<Vector>> gamma;          // [k][l], one entry per mark

  void validate() const {
    jumps.validate();
    if (maturities.size() < 2) throw std::invalid_argument("HjmSurface: need >= 2 maturities");
    for (std::size_t l = 1; l < maturities.size(); ++l) {
      if (!(maturities[l] > maturities[l - 1])) {
        throw std::invalid_argument("HjmSurface: maturities must be strictly increasing");
      }
    }
    for (std::size_t k = 1; k < eval_times.size(); ++k) {
      if (!(eval_times[k] > eval_times[k - 1])) {
        throw std::invalid_argument("HjmSurface: eval times must be strictly increasing");
      }
    }
    const std::size_t nk = eval_times.size();
    const std::size_t nl = maturities.size();
    if (f0.size() != nl || alpha.size() != nk || sigma.size() != nk || gamma.size() != nk) {
      throw std::invalid_argument("HjmSurface: array shape mismatch");
    }
    for (std::size_t k = 0; k < nk; ++k) {
      if (alpha[k].size() != nl || sigma[k].size() != nl || gamma[k].size() != nl) {
        throw std::invalid_argument("HjmSurface: array shape mismatch");
      }
      for (std::size_t l = 0; l < nl; ++l) {
        if (sigma[k][l].size() != m || gamma[k][l].size() != jumps.n()) {
          throw std::invalid_argument("HjmSurface: factor/mark dimension mismatch");
        }
      }
    }
  }

  // A_t(T) = -int_t^T alpha_t(s) ds and its siblings, by quadrature.
  double integrated_alpha(int k, double maturity) const {
    return -detail::trap_integral(maturities, alpha[k], eval_times[k], maturity);
  }
  Vector integrated_sigma(int k, double maturity) const {
    Vector out(m);
    std::vector<double> comp(maturities.size());
    for (int c = 0; c < m; ++c) {
      for (std::size_t l = 0; l < maturities.size(); ++l) comp[l] = sigma[k][l](c);
      out(c) = -detail::trap_integral(maturities, comp, eval_times[k], maturity);
    }
    return out;
  }
  Vector integrated_gamma(int k, double maturity) const {
    Vector out(jumps.n());
    std::vector<double> comp(maturities.size());
    for (int j = 0; j < jumps.n(); ++j) {
      for (std::size_t l = 0; l < maturities.size(); ++l) comp[l] = gamma[k][l](j);
      out(j) = -detail::trap_integral(maturities, comp, eval_times[k], maturity);
    }
    return out;
  }
};

// LHS - RHS of the integrated drift condition
//   -A(T) = 1/2 |Sigma(T)|^2 - <Sigma(T), theta>
//           + sum_j c_j ((1 - rho_j)(e^{Gamma_j(T)} - 1) - Gamma_j(T)).
inline double hjm_drift_residual(const HjmSurface& h, const std::vector<Vector>& theta,
                                 const std::vector<Vector>& rho, int k, int l) {
  h.validate();
  if (k < 0 || k >= static_cast<int>(h.eval_times.size()) || l < 0 ||
      l >= static_cast<int>(h.maturities.size())) {
    throw std::invalid_argument("hjm_drift_residual: index out of range");
  }
  if (h.maturities[l] < h.eval_times[k]) {
    throw std::invalid_argument("hjm_drift_residual: maturity before evaluation time");
  }
  if (theta[k].size() != h.m || rho[k].size() != h.jumps.n()) {
    throw std::invalid_argument("hjm_drift_residual: deflator dimension mismatch");
  }
  const double maturity = h.maturities[l];
  const double big_a = h.integrated_alpha(k, maturity);
  const Vector big_sigma = h.integrated_sigma(k, maturity);
  const Vector big_gamma = h.integrated_gamma(k, maturity);
  double jump_term = 0.0;
  for (int j = 0; j < h.jumps.n(); ++j) {
    jump_term += h.jumps.intensities[j] *
                 ((1.0 - rho[k](j)) * (std::exp(big_gamma(j)) - 1.0) - big_gamma(j));
  }
  return -big_a -
         (0.5 * big_sigma.squaredNorm() - big_sigma.dot(theta[k]) + jump_term);
}

struct HjmSynthesis {
  std::vector<std::vector<double>> alpha;  // drift making (theta, rho) an ELMD pair
  std::vector<double> short_rate;          // f_t(t) of the input surface, per eval time
  std::vector<double> savings_account;     // B_t = exp(int_0^t f_s(s) ds), per eval time
};

// Differentiated drift condition:
//   alpha(T) = -<sigma(T), Sigma(T) - theta> - sum_j c_j gamma_j(T)
//              ((1 - rho_j) e^{Gamma_j(T)} - 1).
// The short rate and savings account are properties of the market surface
// (zero-noise skeleton of the input drift), not of the chosen (theta, rho).
inline HjmSynthesis hjm_synthesize_alpha(const HjmSurface& h, const std::vector<Vector>& theta,
                                         const std::vector<Vector>& rho) {
  h.validate();
  const std::size_t nk = h.eval_times.size();
  const std::size_t nl = h.maturities.size();
  if (theta.size() != nk || rho.size() != nk) {
    throw std::invalid_argument(
        "hjm_synthesize_alpha: theta/rho must be given per evaluation time "
        "(maturity-independent); a per-maturity market price of risk is not "
        "representable in this model");
  }
  HjmSynthesis out;
  out.alpha.assign(nk, std::vector<double>(nl, 0.0));
  for (std::size_t k = 0; k < nk; ++k) {
    if (theta[k].size() != h.m || rho[k].size() != h.jumps.n()) {
      throw std::invalid_argument("hjm_synthesize_alpha: deflator dimension mismatch");
    }
    for (std::size_t l = 0; l < nl; ++l) {
      if (h.maturities[l] < h.eval_times[k]) continue;  // only T >= t is meaningful
      const Vector big_sigma = h.integrated_sigma(static_cast<int>(k), h.maturities[l]);
      const Vector big_gamma = h.integrated_gamma(static_cast<int>(k), h.maturities[l]);
      double jump_term = 0.0;
      for (int j = 0; j < h.jumps.n(); ++j) {
        jump_term += h.jumps.intensities[j] * h.gamma[k][l](j) *
                     ((1.0 - rho[k](j)) * std::exp(big_gamma(j)) - 1.0);
      }
      out.alpha[k][l] = -h.sigma[k][l].dot(big_sigma - theta[k]) - jump_term;
    }
  }

  // short rate r(t) = f_t(t) from the input surface along the zero-noise
  // skeleton: f_t(T) = f_0(T) + int_0^t alpha_u(T) du
  out.short_rate.resize(nk);
  auto interp_curve = [&](const std::vector<double>& vals, double x) {
    if (x <= h.maturities.front()) return vals.front();
    if (x >= h.maturities.back()) return vals.back();
    std::size_t hi = 1;
    while (h.maturities[hi] < x) ++hi;
    const double w = (x - h.maturities[hi - 1]) / (h.maturities[hi] - h.maturities[hi - 1]);
    return (1.0 - w) * vals[hi - 1] + w * vals[hi];
  };
  for (std::size_t k = 0; k < nk; ++k) {
    const double t = h.eval_times[k];
    // int_0^t alpha_u(t) du by trapezoid over the eval-time grid
    std::vector<double> alpha_at_t(nk);
    for (std::size_t u = 0; u < nk; ++u) alpha_at_t[u] = interp_curve(h.alpha[u], t);
    double drift_int = 0.0;
    if (k > 0) {
      std::vector<double> tg(h.eval_times.begin(), h.eval_times.begin() + k + 1);
      std::vector<double> vg(alpha_at_t.begin(), alpha_at_t.begin() + k + 1);
      drift_int = detail::trap_integral(tg, vg, tg.front(), t);
      if (tg.front() > 0.0) {
        // extend constantly to 0 when the first eval time is positive
        drift_int += alpha_at_t.front() * tg.front();
      }
    } else if (t > 0.0) {
      drift_int = alpha_at_t.front() * t;
    }
    out.short_rate[k] = interp_curve(h.f0, t) + drift_int;
  }

  // B_t = exp(int_0^t r(s) ds) over the eval-time grid
  out.savings_account.resize(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    std::vector<double> tg(h.eval_times.begin(), h.eval_times.begin() + k + 1);
    std::vector<double> rg(out.short_rate.begin(), out.short_rate.begin() + k + 1);
    double rate_int = 0.0;
    if (k > 0) rate_int = detail::trap_integral(tg, rg, tg.front(), tg.back());
    if (h.eval_times.front() > 0.0) rate_int += out.short_rate.front() * h.eval_times.front();
    out.savings_account[k] = std::exp(rate_int);
  }
  return out;
}

// Brody-Hughston density family at a fixed time: a strictly positive density
// on an x grid with coefficient arrays in the Musiela parametrization.
struct BhFamily {
  std::vector<double> x_grid;
  std::vector<double> density;                 // rho(x) > 0, trapezoidal integral 1
  int m = 1;
  JumpMeasure jumps;
  std::vector<double> alpha_bar;               // per x
  std::vector<Vector> sigma_bar;               // per x, R^m
  std::vector<Vector> gamma_bar;               // per x, one entry per mark
  double quad_tol = 1e-8;

  void validate() const {
    jumps.validate();
    if (x_grid.size() < 2 || density.size() != x_grid.size() ||
        alpha_bar.size() != x_grid.size() || sigma_bar.size() != x_grid.size() ||
        gamma_bar.size() != x_grid.size()) {
      throw std::invalid_argument("BhFamily: array shape mismatch");
    }
    for (std::size_t l = 1; l < x_grid.size(); ++l) {
      if (!(x_grid[l] > x_grid[l - 1])) {
        throw std::invalid_argument("BhFamily: x grid must be strictly increasing");
      }
    }
    for (double v : density) {
      if (!(v > 0.0)) throw std::invalid_argument("BhFamily: density must be strictly positive");
    }
    const double mass =
        detail::trap_integral(x_grid, density, x_grid.front(), x_grid.back());
    if (std::abs(mass - 1.0) > quad_tol) {
      throw std::invalid_argument("BhFamily: density must integrate to 1, got " +
                                  std::to_string(mass));
    }
  }

  double integral_against_density(const std::vector<double>& vals) const {
    std::vector<double> prod(x_grid.size());
    for (std::size_t l = 0; l < x_grid.size(); ++l) prod[l] = vals[l] * density[l];
    return detail::trap_integral(x_grid, prod, x_grid.front(), x_grid.back());
  }
};

struct BhReport {
  double short_rate_residual = 0.0;            // |r - rho(0)|
  std::vector<double> drift_residual;          // per x: alpha_bar - r - <sigma_bar,theta> - <gamma_bar,psi>
  double max_drift_residual = 0.0;
  double cons1 = 0.0;                          // int (d_x rho + rho alpha_bar) dx
  Vector cons2;                                // int sigma_bar rho dx, per factor
  Vector cons3;                                // int gamma_bar rho dx, per mark
  double rho_zero_residual = 0.0;              // rho(0) - int rho alpha_bar dx
  bool pass = false;
};

inline BhReport bh_check(const BhFamily& b, const Vector& theta, const Vector& rho_defl,
                         double r) {
  b.validate();
  if (theta.size() != b.m || rho_defl.size() != b.jumps.n()) {
    throw std::invalid_argument("bh_check: deflator dimension mismatch");
  }
  BhReport report;
  report.short_rate_residual = std::abs(r - b.density.front());

  report.drift_residual.resize(b.x_grid.size());
  for (std::size_t l = 0; l < b.x_grid.size(); ++l) {
    double jump_term = 0.0;
    for (int j = 0; j < b.jumps.n(); ++j) {
      jump_term += b.jumps.intensities[j] * b.gamma_bar[l](j) * rho_defl(j);
    }
    report.drift_residual[l] =
        b.alpha_bar[l] - r - b.sigma_bar[l].dot(theta) - jump_term;
    report.max_drift_residual =
        std::max(report.max_drift_residual, std::abs(report.drift_residual[l]));
  }

  // int d_x rho dx = rho(x_max) - rho(0); the density is assumed negligible
  // at the far end of the grid
  const double alpha_int = b.integral_against_density(b.alpha_bar);
  report.cons1 = (b.density.back() - b.density.front()) + alpha_int;
  report.rho_zero_residual = b.density.front() - alpha_int;

  report.cons2 = Vector::Zero(b.m);
  for (int c = 0; c < b.m; ++c) {
    std::vector<double> comp(b.x_grid.size());
    for (std::size_t l = 0; l < b.x_grid.size(); ++l) comp[l] = b.sigma_bar[l](c);
    report.cons2(c) = b.integral_against_density(comp);
  }
  report.cons3 = Vector::Zero(b.jumps.n());
  for (int j = 0; j < b.jumps.n(); ++j) {
    std::vector<double> comp(b.x_grid.size());
    for (std::size_t l = 0; l < b.x_grid.size(); ++l) comp[l] = b.gamma_bar[l](j);
    report.cons3(j) = b.integral_against_density(comp);
  }

  const double tol = b.quad_tol;
  report.pass = report.short_rate_residual <= tol && report.max_drift_residual <= tol &&
                std::abs(report.cons1) <= tol &&
                (b.m == 0 || report.cons2.cwiseAbs().maxCoeff() <= tol) &&
                (b.jumps.n() == 0 || report.cons3.cwiseAbs().maxCoeff() <= tol) &&
                std::abs(report.rho_zero_residual) <= tol;
  return report;
}

// Fills alpha_bar with the drift condition alpha_bar = r + <sigma_bar,theta>
// + <gamma_bar,psi> at r = rho(0); used to build consistent families.
inline void bh_synthesize_alpha(BhFamily& b, const Vector& theta, const Vector& rho_defl) {
  b.validate();
  const double r = b.density.front();
  b.alpha_bar.resize(b.x_grid.size());
  for (std::size_t l = 0; l < b.x_grid.size(); ++l) {
    double jump_term = 0.0;
    for (int j = 0; j < b.jumps.n(); ++j) {
      jump_term += b.jumps.intensities[j] * b.gamma_bar[l](j) * rho_defl(j);
    }
    b.alpha_bar[l] = r + b.sigma_bar[l].dot(theta) + jump_term;
  }
}

}  // namespace elmd::termstruct
