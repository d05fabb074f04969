#include <cmath>
#include <string>

#include "solver_common.hpp"
#include "varimix/parallel.hpp"

namespace varimix {

double plmm_cost(const SpectralImage& image, const Matrix& m0, const Matrix& abundances,
                 const std::vector<Matrix>& perturbations, const SolverOptions& options) {
  const auto n_pixels = image.pixels();
  if (perturbations.size() != n_pixels || static_cast<std::size_t>(abundances.cols()) != n_pixels) {
    throw DimensionError("plmm_cost: pixel count mismatch");
  }
  double data = 0.0;
  double penalty = 0.0;
  for (std::size_t n = 0; n < n_pixels; ++n) {
    data += (image.pixel(n) - (m0 + perturbations[n]) * abundances.col(static_cast<Eigen::Index>(n))).squaredNorm();
    penalty += perturbations[n].squaredNorm();
  }
  return data + options.gamma_plmm * penalty;
}

UnmixingResult plmm_unmix(const SpectralImage& image, const Matrix& m0, const SolverOptions& options,
                          const AlternatingInit& init, std::vector<std::string> class_names) {
  using Index = Eigen::Index;
  detail::Stopwatch clock;
  detail::require_finite(image, m0, "plmm_unmix");
  if (!(options.gamma_plmm > 0.0)) throw DomainError("plmm_unmix: gamma must be positive");
  const auto n_pixels = image.pixels();
  const auto n = static_cast<Index>(n_pixels);
  const Index bands = m0.rows();
  SolverLog log;

  Matrix a = init.abundances ? *init.abundances : fcls(image, m0, options).abundances.fractions();
  std::vector<Matrix> dm = init.field ? *init.field : std::vector<Matrix>(n_pixels, Matrix::Zero(bands, m0.cols()));
  if (a.rows() != m0.cols() || a.cols() != n || dm.size() != n_pixels) {
    throw DimensionError("plmm_unmix: initialization shape mismatch");
  }

  auto cost = [&] {
    const double j = plmm_cost(image, m0, a, dm, options);
    if (!std::isfinite(j)) throw DivergenceError("plmm_unmix: non-finite cost");
    return j;
  };
  double current = cost();
  log.cost_history.push_back(current);
  log.converged = false;
  std::size_t rejected_steps = 0;

  for (std::size_t iter = 1; iter <= options.max_iters && current > 0.0; ++iter) {
    const double previous = current;

    // dM-step: argmin |r - dM a|^2 + gamma |dM|^2 is r a' / (a'a + gamma).
    {
      std::vector<Matrix> dm_new = dm;
      parallel_for(n_pixels, [&](std::size_t i) {
        const auto an = a.col(static_cast<Index>(i));
        const Vector r = image.pixel(i) - m0 * an;
        dm_new[i] = r * an.transpose() / (an.squaredNorm() + options.gamma_plmm);
      });
      std::swap(dm, dm_new);
      const double j = cost();
      if (j > current) {
        std::swap(dm, dm_new);
        ++rejected_steps;
      } else {
        current = j;
      }
    }

    // A-step: FCLS with the perturbed matrices.
    {
      Matrix a_new = a;
      parallel_for(n_pixels, [&](std::size_t i) {
        const auto col = static_cast<Index>(i);
        const auto y = image.pixel(i);
        const Matrix m = m0 + dm[i];
        const Vector cand = fcls_pixel(m, y, options);
        if ((y - m * cand).squaredNorm() <= (y - m * a.col(col)).squaredNorm()) a_new.col(col) = cand;
      });
      std::swap(a, a_new);
      const double j = cost();
      if (j > current) {
        std::swap(a, a_new);
        ++rejected_steps;
      } else {
        current = j;
      }
    }

    log.cost_history.push_back(current);
    log.iterations = iter;
    if (current == 0.0 || (previous - current) <= options.tol * previous) {
      log.converged = true;
      break;
    }
  }
  if (current == 0.0) log.converged = true;
  if (rejected_steps > 0) {
    log.warnings.push_back(std::to_string(rejected_steps) + " update(s) rejected to keep the cost nonincreasing");
  }
  log.final_cost = current;

  // The solver state stays unclamped; only the emitted field is clipped.
  std::vector<Matrix> emitted(n_pixels);
  Matrix reconstruction(bands, n);
  for (std::size_t i = 0; i < n_pixels; ++i) {
    emitted[i] = (m0 + dm[i]).cwiseMax(0.0);
    reconstruction.col(static_cast<Index>(i)) = emitted[i] * a.col(static_cast<Index>(i));
  }
  auto re = detail::per_pixel_re(image.data(), reconstruction);
  log.wall_seconds = clock.seconds();
  return UnmixingResult{AbundanceMap(std::move(a), std::move(class_names), true),
                        EndmemberField(std::move(emitted)),
                        std::nullopt,
                        std::move(re),
                        std::move(reconstruction),
                        std::nullopt,
                        std::nullopt,
                        {},
                        std::move(log)};
}

}  // namespace varimix
