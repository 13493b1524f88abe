#pragma once

// Exact pure-jump semimartingale calculus on finite paths: stochastic
// exponentials, quadratic covariation, Yor's formula, the R <-> R-tilde and
// Theta <-> Theta-tilde multiplicative-decomposition maps and inverse
// stochastic exponentials. All identities hold in exact arithmetic up to
// floating-point rounding.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace elmd::discalc {

// Finite-variation pure-jump path started at 0: ordered (time, jump) pairs.
struct PureJumpPath {
  std::vector<double> times;
  std::vector<double> jumps;

  std::size_t size() const { return times.size(); }

  void validate() const {
    if (times.size() != jumps.size()) {
      throw std::invalid_argument("PureJumpPath: times/jumps size mismatch");
    }
    double prev = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!(times[i] > prev) && !(i == 0 && times[i] > 0.0)) {
        throw std::invalid_argument("PureJumpPath: times must be strictly increasing and > 0");
      }
      if (!std::isfinite(jumps[i])) {
        throw std::invalid_argument("PureJumpPath: non-finite jump");
      }
      prev = times[i];
    }
  }

  double value_at(double t) const {
    double v = 0.0;
    for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) v += jumps[i];
    return v;
  }
};

// Multiplicative path: value at t is the product of all factors up to t,
// initial value 1; all factors positive.
struct ExpPath {
  std::vector<double> times;
  std::vector<double> factors;

  double value_at(double t) const {
    double v = 1.0;
    for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) v *= factors[i];
    return v;
  }
  double terminal() const {
    double v = 1.0;
    for (double f : factors) v *= f;
    return v;
  }
};

// E(X): factor 1 + dX at each jump time; requires dX > -1.
inline ExpPath stoch_exp(const PureJumpPath& x) {
  x.validate();
  ExpPath e;
  e.times = x.times;
  e.factors.reserve(x.jumps.size());
  for (double dx : x.jumps) {
    if (dx <= -1.0) throw std::domain_error("stoch_exp: jump must exceed -1");
    e.factors.push_back(1.0 + dx);
  }
  return e;
}

namespace detail {

// Applies op(dx, dy) at the merged jump times of x and y, with zero standing
// in for the absent side. Jumps mapping to zero are kept out of the result.
template <typename Op>
PureJumpPath merge(const PureJumpPath& x, const PureJumpPath& y, Op op) {
  PureJumpPath out;
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    double t;
    double dx = 0.0, dy = 0.0;
    if (j >= y.size() || (i < x.size() && x.times[i] < y.times[j])) {
      t = x.times[i];
      dx = x.jumps[i++];
    } else if (i >= x.size() || y.times[j] < x.times[i]) {
      t = y.times[j];
      dy = y.jumps[j++];
    } else {
      t = x.times[i];
      dx = x.jumps[i++];
      dy = y.jumps[j++];
    }
    const double dz = op(dx, dy);
    if (dz != 0.0) {
      out.times.push_back(t);
      out.jumps.push_back(dz);
    }
  }
  return out;
}

template <typename Op>
PureJumpPath map_jumps(const PureJumpPath& x, Op op) {
  PureJumpPath out;
  out.times.reserve(x.size());
  out.jumps.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dz = op(x.jumps[i]);
    if (dz != 0.0) {
      out.times.push_back(x.times[i]);
      out.jumps.push_back(dz);
    }
  }
  return out;
}

}  // namespace detail

// [X,Y]: jumps dX dY at common jump times.
inline PureJumpPath quad_cov(const PureJumpPath& x, const PureJumpPath& y) {
  x.validate();
  y.validate();
  return detail::merge(x, y, [](double dx, double dy) { return dx * dy; });
}

// X + Y + [X,Y], so that E(X) E(Y) = E(yor_sum(X,Y)) exactly.
inline PureJumpPath yor_sum(const PureJumpPath& x, const PureJumpPath& y) {
  x.validate();
  y.validate();
  return detail::merge(x, y, [](double dx, double dy) { return dx + dy + dx * dy; });
}

// R -> R-tilde with dR-tilde = dR / (1 + dR); E(-R-tilde) = E(R)^{-1}.
inline PureJumpPath rate_to_tilde(const PureJumpPath& r) {
  r.validate();
  return detail::map_jumps(r, [](double dr) {
    if (dr <= -1.0) throw std::domain_error("rate_to_tilde: jump must exceed -1");
    return dr / (1.0 + dr);
  });
}

// R-tilde -> R with dR = dR-tilde / (1 - dR-tilde); inverse of rate_to_tilde.
inline PureJumpPath rate_from_tilde(const PureJumpPath& rt) {
  rt.validate();
  return detail::map_jumps(rt, [](double drt) {
    if (drt >= 1.0) throw std::domain_error("rate_from_tilde: jump must be < 1");
    return drt / (1.0 - drt);
  });
}

// Theta -> Theta-tilde = Theta - [Theta, R-tilde]; dTheta-tilde = (1 - dR-tilde) dTheta.
// The output satisfies dTheta-tilde + dR-tilde < 1.
inline PureJumpPath mpr_to_tilde(const PureJumpPath& theta, const PureJumpPath& rt) {
  theta.validate();
  rt.validate();
  for (double dt : theta.jumps) {
    if (dt >= 1.0) throw std::domain_error("mpr_to_tilde: Theta jump must be < 1");
  }
  for (double dr : rt.jumps) {
    if (dr >= 1.0) throw std::domain_error("mpr_to_tilde: R-tilde jump must be < 1");
  }
  PureJumpPath out = detail::merge(theta, rt, [](double dt, double drt) {
    return (1.0 - drt) * dt;
  });
  // drop the pure R-tilde jump times (dt = 0 there, already filtered by merge)
  return out;
}

// Inverse of mpr_to_tilde for the same R-tilde: dTheta = dTheta-tilde / (1 - dR-tilde).
inline PureJumpPath mpr_from_tilde(const PureJumpPath& theta_tilde, const PureJumpPath& rt) {
  theta_tilde.validate();
  rt.validate();
  return detail::merge(theta_tilde, rt, [](double dtt, double drt) {
    if (dtt + drt >= 1.0) {
      throw std::domain_error("mpr_from_tilde: requires dTheta-tilde + dR-tilde < 1");
    }
    return dtt / (1.0 - drt);
  });
}

// Y with E(X) E(Y) = 1 exactly: dY = -dX / (1 + dX).
inline PureJumpPath inv_stoch_exp(const PureJumpPath& x) {
  x.validate();
  return detail::map_jumps(x, [](double dx) {
    if (dx <= -1.0) throw std::domain_error("inv_stoch_exp: jump must exceed -1");
    return -dx / (1.0 + dx);
  });
}

}  // namespace elmd::discalc
