#pragma once

// Small dense quadratic programs solved once per pixel by the unmixers:
//
//   minimize 1/2 x'Gx - c'x   subject to x >= 0  [and 1'x = 1]
//
// where G = M'M and c = M'y for an L x P endmember matrix M.

#include <cstddef>

#include "varimix/types.hpp"

namespace varimix {

/// Euclidean projection of v onto {x >= 0, sum(x) = radius}. Sort-based.
Vector project_to_simplex(const Eigen::Ref<const Vector>& v, double radius = 1.0);

struct QpResult {
  Vector x;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Primal active-set method. Exact up to rounding: terminates when every
/// multiplier of the active bounds is nonnegative.
QpResult solve_nonneg_qp(const Matrix& gram, const Vector& linear, bool sum_to_one,
                         std::size_t max_iterations = 0);

struct AdmmSettings {
  double rho = 0.0;  // <= 0 selects trace(G) / P
  double tol = 1e-8;
  std::size_t max_iterations = 2000;
};

/// Operator-splitting FCLS: x-update is a ridge solve, z-update a simplex
/// projection. Returns the feasible iterate z.
QpResult solve_simplex_qp_admm(const Matrix& gram, const Vector& linear,
                               const AdmmSettings& settings = {});

/// Largest violation of the KKT conditions of the QP at x (gradient sign,
/// complementarity, feasibility), relative to the problem scale.
double qp_kkt_residual(const Matrix& gram, const Vector& linear, const Vector& x,
                       bool sum_to_one);

}  // namespace varimix
