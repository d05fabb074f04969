#include "varimix/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "varimix/errors.hpp"

namespace varimix {
namespace {

using Index = Eigen::Index;

double problem_scale(const Matrix& gram, const Vector& linear) {
  double s = 1e-300;
  if (gram.size()) s = std::max(s, gram.diagonal().cwiseAbs().maxCoeff());
  if (linear.size()) s = std::max(s, linear.cwiseAbs().maxCoeff());
  return s;
}

// Minimizer of the QP restricted to the free set (other coordinates fixed at
// zero), ignoring the bounds. Returns the free-set values in `z` and the
// equality multiplier in `nu` (zero without the sum-to-one row).
void solve_free_set(const Matrix& gram, const Vector& linear, const std::vector<Index>& free,
                    bool sum_to_one, Vector& z, double& nu) {
  const auto k = static_cast<Index>(free.size());
  Matrix g(k, k);
  Vector c(k);
  for (Index i = 0; i < k; ++i) {
    c(i) = linear(free[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < k; ++j) g(i, j) = gram(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
  }
  Eigen::LDLT<Matrix> ldlt(g);
  const bool well_posed = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                          ldlt.rcond() > 1e-12;
  if (!sum_to_one) {
    nu = 0.0;
    if (well_posed) {
      z = ldlt.solve(c);
      const double scale = problem_scale(g, c) * std::max(1.0, z.cwiseAbs().maxCoeff());
      if ((g * z - c).cwiseAbs().maxCoeff() <= 1e-9 * scale) return;
    }
    z = g.completeOrthogonalDecomposition().solve(c);
    return;
  }
  if (well_posed) {
    const Vector gi_c = ldlt.solve(c);
    const Vector gi_1 = ldlt.solve(Vector::Ones(k));
    nu = (1.0 - gi_c.sum()) / gi_1.sum();
    z = gi_c + nu * gi_1;
    // rcond is only an estimate; a rounding-level pivot can slip through
    const double scale = problem_scale(g, c) * std::max(1.0, z.cwiseAbs().maxCoeff());
    if (std::isfinite(nu) && (g * z - c - Vector::Constant(k, nu)).cwiseAbs().maxCoeff() <= 1e-9 * scale) return;
  }
  // Singular block (e.g. duplicate library columns): minimum-norm solution of
  // the bordered KKT system.
  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = g;
  kkt.block(0, k, k, 1).setOnes();
  kkt.block(k, 0, 1, k).setOnes();
  Vector rhs(k + 1);
  rhs.head(k) = c;
  rhs(k) = 1.0;
  const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  z = sol.head(k);
  nu = -sol(k);
}

}  // namespace

Vector project_to_simplex(const Eigen::Ref<const Vector>& v, double radius) {
  if (radius <= 0.0) throw DomainError("project_to_simplex: radius must be positive");
  const Index n = v.size();
  if (n == 0) throw DimensionError("project_to_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double t = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

QpResult solve_nonneg_qp(const Matrix& gram, const Vector& linear, bool sum_to_one,
                         std::size_t max_iterations) {
  const Index n = gram.rows();
  if (n == 0 || gram.cols() != n || linear.size() != n) {
    throw DimensionError("solve_nonneg_qp: inconsistent problem size");
  }
  if (!gram.allFinite() || !linear.allFinite()) throw DomainError("solve_nonneg_qp: non-finite input");
  if (max_iterations == 0) max_iterations = 10 * static_cast<std::size_t>(n) + 100;
  const double tol = 1e-12 * problem_scale(gram, linear);

  QpResult result;
  Vector x = Vector::Zero(n);
  std::vector<bool> in_free(static_cast<std::size_t>(n), false);
  if (sum_to_one) {
    // Start from the best vertex of the simplex.
    Index best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      const double value = 0.5 * gram(j, j) - linear(j);
      if (value < best_value) {
        best_value = value;
        best = j;
      }
    }
    x(best) = 1.0;
    in_free[static_cast<std::size_t>(best)] = true;
  }

  auto free_list = [&] {
    std::vector<Index> f;
    for (Index j = 0; j < n; ++j) {
      if (in_free[static_cast<std::size_t>(j)]) f.push_back(j);
    }
    return f;
  };

  std::vector<bool> banned(static_cast<std::size_t>(n), false);
  bool need_pricing = !sum_to_one;  // without the equality row, x = 0 is already optimal on F = {}
  Vector z;
  double nu = 0.0;
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (need_pricing) {
      // Multipliers of the active bounds: lambda_i = g_i - nu.
      const Vector grad = gram * x - linear;
      const auto f = free_list();
      double nu_est = 0.0;
      if (sum_to_one && !f.empty()) {
        for (const Index j : f) nu_est += grad(j);
        nu_est /= static_cast<double>(f.size());
      }
      Index entering = -1;
      double most_negative = -tol;
      for (Index j = 0; j < n; ++j) {
        if (in_free[static_cast<std::size_t>(j)] || banned[static_cast<std::size_t>(j)]) continue;
        const double lambda = grad(j) - nu_est;
        if (lambda < most_negative) {
          most_negative = lambda;
          entering = j;
        }
      }
      if (entering < 0) {
        result.converged = true;
        break;
      }
      in_free[static_cast<std::size_t>(entering)] = true;
      const auto f_new = free_list();
      solve_free_set(gram, linear, f_new, sum_to_one, z, nu);
      const auto pos = static_cast<Index>(std::find(f_new.begin(), f_new.end(), entering) - f_new.begin());
      if (!(z(pos) > 0.0)) {
        // Rounding made the entering direction useless; try another index.
        in_free[static_cast<std::size_t>(entering)] = false;
        banned[static_cast<std::size_t>(entering)] = true;
        continue;
      }
      std::fill(banned.begin(), banned.end(), false);
    } else {
      solve_free_set(gram, linear, free_list(), sum_to_one, z, nu);
    }

    const auto f = free_list();
    // Ratio test: move toward z until the first free coordinate hits zero.
    double alpha = 1.0;
    std::size_t blocking = f.size();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double zi = z(static_cast<Index>(i));
      const double xi = x(f[i]);
      if (zi <= 0.0) {
        const double a = xi / (xi - zi);
        if (a < alpha || blocking == f.size()) {
          alpha = std::min(alpha, a);
          blocking = i;
        }
      }
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
      x(f[i]) += alpha * (z(static_cast<Index>(i)) - x(f[i]));
    }
    if (blocking < f.size()) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (i == blocking || (z(static_cast<Index>(i)) <= 0.0 && x(f[i]) <= 1e-15)) {
          x(f[i]) = 0.0;
          in_free[static_cast<std::size_t>(f[i])] = false;
        }
      }
      if (sum_to_one) {
        const double s = x.sum();
        if (s > 0.0) x /= s;
      }
      need_pricing = false;
    } else {
      need_pricing = true;
    }
  }
  result.x = x.cwiseMax(0.0);
  if (sum_to_one) result.x /= result.x.sum();
  return result;
}

QpResult solve_simplex_qp_admm(const Matrix& gram, const Vector& linear,
                               const AdmmSettings& settings) {
  const Index n = gram.rows();
  if (n == 0 || gram.cols() != n || linear.size() != n) {
    throw DimensionError("solve_simplex_qp_admm: inconsistent problem size");
  }
  const double rho = settings.rho > 0.0 ? settings.rho
                                        : std::max(gram.trace() / static_cast<double>(n), 1e-12);
  const Eigen::LLT<Matrix> factor(gram + rho * Matrix::Identity(n, n));
  Vector z = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector u = Vector::Zero(n);
  QpResult result;
  for (std::size_t iter = 0; iter < settings.max_iterations; ++iter) {
    const Vector x = factor.solve(linear + rho * (z - u));
    const Vector z_prev = z;
    z = project_to_simplex(x + u);
    u += x - z;
    result.iterations = iter + 1;
    const double primal = (x - z).norm();
    const double dual = rho * (z - z_prev).norm();
    if (primal <= settings.tol && dual <= settings.tol) {
      result.converged = true;
      break;
    }
  }
  result.x = z;
  return result;
}

double qp_kkt_residual(const Matrix& gram, const Vector& linear, const Vector& x,
                       bool sum_to_one) {
  const double scale = problem_scale(gram, linear);
  const Vector grad = gram * x - linear;
  double nu = 0.0;
  if (sum_to_one) {
    // Best-fitting equality multiplier over the support.
    double weight = 0.0;
    for (Index j = 0; j < x.size(); ++j) {
      if (x(j) > 1e-12) {
        nu += grad(j);
        weight += 1.0;
      }
    }
    nu = weight > 0 ? nu / weight : grad.minCoeff();
  }
  double worst = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double lambda = grad(j) - nu;
    worst = std::max(worst, std::max(0.0, -lambda));          // dual feasibility
    worst = std::max(worst, std::abs(lambda) * std::max(0.0, std::min(x(j), 1.0)));  // complementarity
    worst = std::max(worst, std::max(0.0, -x(j)) * scale);
  }
  if (sum_to_one) worst = std::max(worst, std::abs(x.sum() - 1.0) * scale);
  return worst / scale;
}

}  // namespace varimix
