#pragma once

// Finite-dimensional linear-algebra kernels: Moore-Penrose pseudoinverse,
// consistent-system feasibility, minimal-norm solutions, PSD completion via
// Schur complements, Gram matrices and kernel extension.

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace elmd::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Tolerances {
  double rank_rel_cutoff = 1e-12;   // relative to largest singular value
  double feasibility_rel_tol = 1e-9;
  double sym_tol = 1e-10;
  double psd_tol = 1e-10;
};

class InfeasibleSystem : public std::runtime_error {
 public:
  explicit InfeasibleSystem(double residual)
      : std::runtime_error("linear system is infeasible, residual = " +
                           std::to_string(residual)),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

// A finitely supported measure on R^d \ {0} with positive weights.
struct FiniteKernel {
  std::vector<Vector> points;
  std::vector<double> weights;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.size() != weights.size()) {
      throw std::invalid_argument("FiniteKernel: points/weights size mismatch");
    }
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (!(weights[k] > 0.0)) {
        throw std::invalid_argument("FiniteKernel: weights must be positive");
      }
      if (points[k].size() != points.front().size()) {
        throw std::invalid_argument("FiniteKernel: ragged points");
      }
      if (points[k].isZero(0.0)) {
        throw std::invalid_argument("FiniteKernel: point at the origin");
      }
    }
  }

  // Second-moment matrix sum_k w_k x_k x_k^T.
  Matrix second_moment() const {
    const int d = dim();
    Matrix m = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < points.size(); ++k) {
      m += weights[k] * points[k] * points[k].transpose();
    }
    return m;
  }
};

inline bool is_symmetric(const Matrix& a, double sym_tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= sym_tol * (1.0 + a.cwiseAbs().maxCoeff());
}

inline double min_eigenvalue(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Square matrix certified symmetric PSD (smallest eigenvalue >= -psd_tol).
struct PsdMatrix {
  Matrix m;

  PsdMatrix() = default;
  explicit PsdMatrix(Matrix mat, const Tolerances& tol = {}) : m(std::move(mat)) {
    require_finite(m, "PsdMatrix");
    if (!is_symmetric(m, tol.sym_tol)) {
      throw std::invalid_argument("PsdMatrix: not symmetric within tolerance");
    }
    if (min_eigenvalue(m) < -tol.psd_tol * (1.0 + m.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("PsdMatrix: negative eigenvalue beyond tolerance");
    }
  }

  Eigen::Index dim() const { return m.rows(); }
};

// Moore-Penrose inverse via SVD with a relative rank cutoff.
inline Matrix pinv(const Matrix& a, const Tolerances& tol = {}) {
  require_finite(a, "pinv");
  if (a.rows() == 0 || a.cols() == 0) return Matrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? tol.rank_rel_cutoff * sv(0) : 0.0;
  Vector inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv_sv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

struct Feasibility {
  bool feasible = false;
  double residual = 0.0;
};

// Toleranced version of the range test A A^+ b = b.
inline Feasibility solvable(const Matrix& a, const Vector& b, const Tolerances& tol = {}) {
  if (a.rows() != b.size()) {
    throw std::invalid_argument("solvable: dimension mismatch");
  }
  require_finite(a, "solvable");
  const Matrix ap = pinv(a, tol);
  const double residual = (b - a * (ap * b)).norm();
  return {residual <= tol.feasibility_rel_tol * (1.0 + b.norm()), residual};
}

// Minimal-norm solution x = A^+ b of a consistent system.
inline Vector least_norm(const Matrix& a, const Vector& b, const Tolerances& tol = {}) {
  const Feasibility f = solvable(a, b, tol);
  if (!f.feasible) throw InfeasibleSystem(f.residual);
  return pinv(a, tol) * b;
}

// Smallest c such that [[A, b], [b^T, c]] is PSD, if any such c exists.
inline std::optional<double> psd_completion(const PsdMatrix& a, const Vector& b,
                                            const Tolerances& tol = {}) {
  if (a.dim() != b.size()) {
    throw std::invalid_argument("psd_completion: dimension mismatch");
  }
  const Feasibility f = solvable(a.m, b, tol);
  if (!f.feasible) return std::nullopt;
  return (pinv(a.m, tol) * b).dot(b);
}

// Gram matrix A_ij = <x_i, x_j>.
inline PsdMatrix gram(const std::vector<Vector>& vectors, const Tolerances& tol = {}) {
  const std::size_t n = vectors.size();
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) {
      throw std::invalid_argument("gram: ragged input");
    }
  }
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      g(i, j) = g(j, i) = vectors[i].dot(vectors[j]);
    }
  }
  PsdMatrix out;
  out.m = std::move(g);
  (void)tol;
  return out;
}

// Split Ax + By = b into a single consistent system (A+B)x = b; the
// minimal-norm solution of the sum solves the split with x = y.
inline std::optional<std::pair<Vector, Vector>> split_solve(const PsdMatrix& a,
                                                            const PsdMatrix& b_mat,
                                                            const Vector& b,
                                                            const Tolerances& tol = {}) {
  if (a.dim() != b_mat.dim() || a.dim() != b.size()) {
    throw std::invalid_argument("split_solve: dimension mismatch");
  }
  const Matrix c = a.m + b_mat.m;
  const Feasibility f = solvable(c, b, tol);
  if (!f.feasible) return std::nullopt;
  Vector x = pinv(c, tol) * b;
  return std::make_pair(x, x);
}

// Extend K on R^d to K-hat on R^{d+1} through l(x) = (x, <A^+ b, x>), so that
// the cross moments of the extra coordinate reproduce b.
inline std::optional<FiniteKernel> extend_kernel(const FiniteKernel& k, const PsdMatrix& a,
                                                 const Vector& b, const Tolerances& tol = {}) {
  k.validate();
  const int d = static_cast<int>(a.dim());
  if (b.size() != d || (!k.points.empty() && k.dim() != d)) {
    throw std::invalid_argument("extend_kernel: dimension mismatch");
  }
  const Matrix moment = k.points.empty() ? Matrix::Zero(d, d) : k.second_moment();
  const double scale = 1.0 + a.m.cwiseAbs().maxCoeff();
  if ((moment - a.m).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("extend_kernel: A does not match kernel second moments");
  }
  const Feasibility f = solvable(a.m, b, tol);
  if (!f.feasible) return std::nullopt;
  const Vector y = pinv(a.m, tol) * b;
  FiniteKernel out;
  out.weights = k.weights;
  out.points.reserve(k.points.size());
  for (const auto& x : k.points) {
    Vector lifted(d + 1);
    lifted.head(d) = x;
    lifted(d) = y.dot(x);
    out.points.push_back(std::move(lifted));
  }
  return out;
}

}  // namespace elmd::linalg
