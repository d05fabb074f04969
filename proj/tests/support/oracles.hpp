#pragma once

// Independent reference implementations used only by the tests. They are
// deliberately brute force so that they share no code path with the
// library solvers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// min 1/2 x'Gx - c'x  s.t. x >= 0 [, 1'x = 1] by enumerating every support
// set, solving the equality-constrained stationarity system on it, and
// keeping the best feasible candidate. Exponential; fine for P <= 12.
inline VectorXd qp_enumerate(const MatrixXd& g, const VectorXd& c, bool sum_to_one) {
  const auto p = g.rows();
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_x = VectorXd::Zero(p);
  for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (mask & (1u << i)) s.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(s.size());
    const Eigen::Index dim = sum_to_one ? k + 1 : k;
    MatrixXd kkt = MatrixXd::Zero(dim, dim);
    VectorXd rhs = VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < k; ++i) {
      rhs(i) = c(s[i]);
      for (Eigen::Index j = 0; j < k; ++j) kkt(i, j) = g(s[i], s[j]);
      if (sum_to_one) {
        kkt(i, k) = 1.0;
        kkt(k, i) = 1.0;
      }
    }
    if (sum_to_one) rhs(k) = 1.0;
    const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    VectorXd x = VectorXd::Zero(p);
    bool feasible = sol.allFinite();
    for (Eigen::Index i = 0; i < k && feasible; ++i) {
      if (sol(i) < -1e-12) feasible = false;
      x(s[i]) = std::max(sol(i), 0.0);
    }
    if (!feasible) continue;
    if (sum_to_one && std::abs(x.sum() - 1.0) > 1e-9) continue;
    const double f = 0.5 * x.dot(g * x) - c.dot(x);
    if (f < best - 1e-15) {
      best = f;
      best_x = x;
    }
  }
  if (!sum_to_one) {
    // x = 0 is feasible too
    if (0.0 < best - 1e-15) best_x.setZero();
  }
  return best_x;
}

inline VectorXd fcls(const MatrixXd& m, const VectorXd& y) {
  return qp_enumerate(m.transpose() * m, m.transpose() * y, true);
}

inline VectorXd nnls(const MatrixXd& m, const VectorXd& y) {
  return qp_enumerate(m.transpose() * m, m.transpose() * y, false);
}

// Cyclic coordinate descent for min 1/2|y - Ma|^2 + lambda 1'a, a >= 0.
inline VectorXd lasso_cd(const MatrixXd& m, const VectorXd& y, double lambda, int sweeps = 20000) {
  const MatrixXd g = m.transpose() * m;
  const VectorXd c = m.transpose() * y;
  VectorXd a = VectorXd::Zero(m.cols());
  for (int s = 0; s < sweeps; ++s) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      if (g(j, j) == 0.0) continue;
      const double grad = g.row(j).dot(a) - c(j) + lambda;
      const double next = std::max(0.0, a(j) - grad / g(j, j));
      change = std::max(change, std::abs(next - a(j)));
      a(j) = next;
    }
    if (change < 1e-15) break;
  }
  return a;
}

// Simplified Hapke reflectance through the Chandrasekhar H-function
// approximation H(mu) = (1 + 2 mu) / (1 + 2 mu sqrt(1 - w)).
inline double hapke(double w, double mu1, double mu2) {
  const double h1 = (1.0 + 2.0 * mu1) / (1.0 + 2.0 * mu1 * std::sqrt(1.0 - w));
  const double h2 = (1.0 + 2.0 * mu2) / (1.0 + 2.0 * mu2 * std::sqrt(1.0 - w));
  return w * h1 * h2 / ((1.0 + 2.0 * mu1) * (1.0 + 2.0 * mu2));
}

inline double angle(const VectorXd& a, const VectorXd& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace oracle
