#include <string>

#include "solver_common.hpp"
#include "varimix/parallel.hpp"

namespace varimix {

Vector fcls_pixel(const Matrix& endmembers, const Eigen::Ref<const Vector>& pixel,
                  const SolverOptions& options) {
  const Matrix gram = endmembers.transpose() * endmembers;
  return detail::solve_simplex_ls(gram, endmembers.transpose() * pixel, options);
}

UnmixingResult fcls(const SpectralImage& image, const Matrix& endmembers,
                    const SolverOptions& options, std::vector<std::string> class_names) {
  detail::Stopwatch clock;
  detail::require_finite(image, endmembers, "fcls");
  SolverLog log;
  const auto p = endmembers.cols();
  if (static_cast<std::size_t>(p) > image.bands()) {
    log.warnings.push_back("fcls: more endmembers than bands");
  }
  if (Eigen::ColPivHouseholderQR<Matrix>(endmembers).rank() < p) {
    log.warnings.push_back("fcls: endmember matrix is rank deficient");
  }
  const Matrix gram = endmembers.transpose() * endmembers;
  const Matrix linear = endmembers.transpose() * image.data();
  Matrix a(p, static_cast<Eigen::Index>(image.pixels()));
  parallel_for(image.pixels(), [&](std::size_t n) {
    const auto col = static_cast<Eigen::Index>(n);
    a.col(col) = detail::solve_simplex_ls(gram, linear.col(col), options);
  });
  Matrix reconstruction = endmembers * a;
  auto re = detail::per_pixel_re(image.data(), reconstruction);
  log.iterations = 1;
  log.final_cost = (image.data() - reconstruction).squaredNorm();
  log.wall_seconds = clock.seconds();
  return UnmixingResult{AbundanceMap(std::move(a), std::move(class_names), true),
                        std::nullopt,
                        std::nullopt,
                        std::move(re),
                        std::move(reconstruction),
                        std::nullopt,
                        std::nullopt,
                        {},
                        std::move(log)};
}

}  // namespace varimix
