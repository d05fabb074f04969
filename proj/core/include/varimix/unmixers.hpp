#pragma once

// Unmixing solvers: FCLS baseline, MESMA, L1/L0 sparse unmixing over a
// flattened library, and the ELMM / PLMM alternating solvers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varimix/types.hpp"

namespace varimix {

enum class FclsMethod { active_set, admm };
enum class L0Mode { greedy, exhaustive };

struct SolverOptions {
  // Outer iterations and relative cost-change tolerance (ELMM, PLMM).
  std::size_t max_iters = 200;
  double tol = 1e-6;
  // Splitting penalty for the ADMM-based solvers; <= 0 picks trace(G) / P.
  double rho = 0.0;
  // L1 weight of sparse unmixing.
  double lambda_sparse = 0.0;
  // ELMM penalties: endmember deviation from m0 diag(psi), and 4-neighbour
  // smoothness of the scaling maps.
  double lambda_m = 0.5;
  double lambda_psi = 0.05;
  // PLMM penalty on ||dM_n||_F^2.
  double gamma_plmm = 1.0;
  std::uint64_t seed = 0;

  FclsMethod fcls_method = FclsMethod::active_set;
  std::size_t admm_max_iters = 2000;
  double admm_tol = 1e-8;

  // MESMA: enumeration budget and optional early-stop RE threshold.
  std::uint64_t mesma_budget = 1'000'000;
  std::optional<double> re_threshold;

  // Sparse L1 inner solver.
  std::size_t sparse_max_iters = 5000;
  double sparse_tol = 1e-7;

  // Sparse L0.
  std::size_t l0_max_nonzeros = 3;
  L0Mode l0_mode = L0Mode::greedy;
  std::uint64_t l0_budget = 10'000;
};

struct SolverLog {
  std::size_t iterations = 0;
  double final_cost = 0.0;
  bool converged = true;
  double wall_seconds = 0.0;
  std::vector<double> cost_history;  // ELMM / PLMM: cost after init, then per iteration
  std::vector<std::string> warnings;
};

using IndexMatrix = Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic>;

struct UnmixingResult {
  AbundanceMap abundances;
  std::optional<EndmemberField> endmembers;
  /// MESMA: within-class signature index per (class, pixel).
  std::optional<IndexMatrix> selected_model;
  /// Per-pixel sqrt(||y_n - yhat_n||^2 / L).
  std::vector<double> per_pixel_re;
  /// L x N reconstruction yhat_n (M_hat_n a_hat_n, or M a_hat_n without a field).
  Matrix reconstruction;
  /// Sparse solvers: raw per-column abundances, total_columns x N.
  std::optional<Matrix> column_abundances;
  /// ELMM: scaling factors psi, P x N.
  std::optional<Matrix> scaling_factors;
  /// Sparse solvers: pixels whose abundance mass was <= 1e-9 (reported uniform).
  std::vector<std::size_t> zero_mass_pixels;
  SolverLog log;
};

/// Per-pixel simplex-constrained least squares with a shared L x P matrix.
UnmixingResult fcls(const SpectralImage& image, const Matrix& endmembers,
                    const SolverOptions& options = {},
                    std::vector<std::string> class_names = {});

/// Exhaustive per-pixel search over all prod(M_p) one-signature-per-class
/// models, FCLS on each, minimal RE kept (ties: lexicographically smallest
/// index tuple). Throws BudgetError beyond options.mesma_budget models.
UnmixingResult mesma(const SpectralImage& image, const SpectralLibrary& library,
                     const SolverOptions& options = {});

/// min ||y - M_lib a||^2 + lambda 1'a  s.t. a >= 0, per pixel. Class-collapsed
/// abundances are row-normalized; raw column abundances are kept alongside.
UnmixingResult sparse_su_l1(const SpectralImage& image, const SpectralLibrary& library,
                            const SolverOptions& options = {});

/// At most K nonzero library columns per pixel: greedy nonnegative matching
/// pursuit with a simplex-constrained refit, or exhaustive support
/// enumeration (budget options.l0_budget supports).
UnmixingResult sparse_su_l0(const SpectralImage& image, const SpectralLibrary& library,
                            const SolverOptions& options = {});

/// Starting point for the alternating solvers; empty members use defaults.
struct AlternatingInit {
  std::optional<Matrix> abundances;          // P x N
  std::optional<Matrix> scaling;             // ELMM psi, P x N
  std::optional<std::vector<Matrix>> field;  // ELMM M_n or PLMM dM_n, per pixel
};

/// Extended LMM: M_n close to m0 diag(psi_n), psi spatially smooth.
UnmixingResult elmm_unmix(const SpectralImage& image, const Matrix& m0,
                          const SolverOptions& options = {},
                          const AlternatingInit& init = {},
                          std::vector<std::string> class_names = {});

/// Perturbed LMM: M_n = m0 + dM_n with a Frobenius penalty on dM_n.
UnmixingResult plmm_unmix(const SpectralImage& image, const Matrix& m0,
                          const SolverOptions& options = {},
                          const AlternatingInit& init = {},
                          std::vector<std::string> class_names = {});

/// Objective values, exposed for verification.
double elmm_cost(const SpectralImage& image, const Matrix& m0, const Matrix& abundances,
                 const Matrix& scaling, const std::vector<Matrix>& field,
                 const SolverOptions& options);
double plmm_cost(const SpectralImage& image, const Matrix& m0, const Matrix& abundances,
                 const std::vector<Matrix>& perturbations, const SolverOptions& options);

/// Simplex-constrained least squares for one pixel with the configured method.
Vector fcls_pixel(const Matrix& endmembers, const Eigen::Ref<const Vector>& pixel,
                  const SolverOptions& options = {});

}  // namespace varimix
