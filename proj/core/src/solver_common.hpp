#pragma once

#include <chrono>
#include <cmath>
#include <vector>

#include "varimix/errors.hpp"
#include "varimix/simplex.hpp"
#include "varimix/unmixers.hpp"

namespace varimix::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline Vector solve_simplex_ls(const Matrix& gram, const Vector& linear, const SolverOptions& o) {
  if (o.fcls_method == FclsMethod::admm) {
    AdmmSettings s;
    s.rho = o.rho;
    s.tol = o.admm_tol;
    s.max_iterations = o.admm_max_iters;
    return solve_simplex_qp_admm(gram, linear, s).x;
  }
  return solve_nonneg_qp(gram, linear, true).x;
}

inline std::vector<double> per_pixel_re(const Matrix& y, const Matrix& reconstruction) {
  std::vector<double> re(static_cast<std::size_t>(y.cols()));
  const double bands = static_cast<double>(y.rows());
  for (Eigen::Index n = 0; n < y.cols(); ++n) {
    re[static_cast<std::size_t>(n)] = std::sqrt((y.col(n) - reconstruction.col(n)).squaredNorm() / bands);
  }
  return re;
}

inline void require_finite(const SpectralImage& image, const Matrix& m, const char* who) {
  if (!m.allFinite()) throw DomainError(std::string(who) + ": non-finite endmember value");
  if (static_cast<std::size_t>(m.rows()) != image.bands()) {
    throw DimensionError(std::string(who) + ": endmember matrix has " + std::to_string(m.rows()) +
                         " bands, image has " + std::to_string(image.bands()));
  }
  if (m.cols() == 0) throw DimensionError(std::string(who) + ": no endmembers");
}

}  // namespace varimix::detail
