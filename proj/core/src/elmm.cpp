#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <string>

#include "solver_common.hpp"
#include "varimix/parallel.hpp"

namespace varimix {
namespace {

using Index = Eigen::Index;

// 4-neighbour graph Laplacian of an H x W grid in row-major pixel order.
Eigen::SparseMatrix<double> grid_laplacian(std::size_t height, std::size_t width) {
  std::vector<Eigen::Triplet<double>> entries;
  const auto n = static_cast<Index>(height * width);
  Vector degree = Vector::Zero(n);
  auto edge = [&](Index a, Index b) {
    entries.emplace_back(a, b, -1.0);
    entries.emplace_back(b, a, -1.0);
    degree(a) += 1.0;
    degree(b) += 1.0;
  };
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const auto i = static_cast<Index>(r * width + c);
      if (c + 1 < width) edge(i, i + 1);
      if (r + 1 < height) edge(i, i + static_cast<Index>(width));
    }
  }
  for (Index i = 0; i < n; ++i) entries.emplace_back(i, i, degree(i));
  Eigen::SparseMatrix<double> lap(n, n);
  lap.setFromTriplets(entries.begin(), entries.end());
  return lap;
}

// Sum over right/down neighbour pairs of (psi_n - psi_n')^2 for one class row.
double smoothness(const Eigen::Ref<const Vector>& psi, std::size_t height, std::size_t width) {
  double s = 0.0;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const auto i = static_cast<Index>(r * width + c);
      if (c + 1 < width) s += (psi(i) - psi(i + 1)) * (psi(i) - psi(i + 1));
      if (r + 1 < height) {
        const auto j = i + static_cast<Index>(width);
        s += (psi(i) - psi(j)) * (psi(i) - psi(j));
      }
    }
  }
  return s;
}

double deviation(const Matrix& field, const Matrix& m0, const Eigen::Ref<const Vector>& psi) {
  return (field - m0 * psi.asDiagonal()).squaredNorm();
}

// Per-class part of the cost touched by the scaling update.
double class_cost(const std::vector<Matrix>& field, const Matrix& m0, const Eigen::Ref<const Vector>& psi_p,
                  Index p, std::size_t height, std::size_t width, const SolverOptions& o) {
  double dev = 0.0;
  for (std::size_t n = 0; n < field.size(); ++n) {
    dev += (field[n].col(p) - m0.col(p) * psi_p(static_cast<Index>(n))).squaredNorm();
  }
  return o.lambda_m * dev + o.lambda_psi * smoothness(psi_p, height, width);
}

void check_inputs(const SpectralImage& image, const Matrix& m0, const SolverOptions& o) {
  detail::require_finite(image, m0, "elmm_unmix");
  for (Index p = 0; p < m0.cols(); ++p) {
    if (m0.col(p).squaredNorm() == 0.0) throw DomainError("elmm_unmix: m0 column " + std::to_string(p) + " is zero");
  }
  if (!(o.lambda_m > 0.0)) throw DomainError("elmm_unmix: lambda_m must be positive");
  if (!(o.lambda_psi >= 0.0)) throw DomainError("elmm_unmix: lambda_psi must be nonnegative");
  if (image.height() * image.width() != image.pixels()) throw DimensionError("elmm_unmix: image grid metadata mismatch");
}

}  // namespace

double elmm_cost(const SpectralImage& image, const Matrix& m0, const Matrix& abundances,
                 const Matrix& scaling, const std::vector<Matrix>& field,
                 const SolverOptions& options) {
  const auto n_pixels = image.pixels();
  if (field.size() != n_pixels || static_cast<std::size_t>(abundances.cols()) != n_pixels ||
      static_cast<std::size_t>(scaling.cols()) != n_pixels) {
    throw DimensionError("elmm_cost: pixel count mismatch");
  }
  double data = 0.0;
  double dev = 0.0;
  for (std::size_t n = 0; n < n_pixels; ++n) {
    const auto i = static_cast<Index>(n);
    data += (image.pixel(n) - field[n] * abundances.col(i)).squaredNorm();
    dev += deviation(field[n], m0, scaling.col(i));
  }
  double smooth = 0.0;
  for (Index p = 0; p < scaling.rows(); ++p) smooth += smoothness(scaling.row(p).transpose(), image.height(), image.width());
  return data + options.lambda_m * dev + options.lambda_psi * smooth;
}

UnmixingResult elmm_unmix(const SpectralImage& image, const Matrix& m0, const SolverOptions& options,
                          const AlternatingInit& init, std::vector<std::string> class_names) {
  detail::Stopwatch clock;
  check_inputs(image, m0, options);
  const auto n_pixels = image.pixels();
  const auto n = static_cast<Index>(n_pixels);
  const Index p_count = m0.cols();
  const Index bands = m0.rows();
  const std::size_t height = image.height();
  const std::size_t width = image.width();
  SolverLog log;

  Matrix a = init.abundances ? *init.abundances : fcls(image, m0, options).abundances.fractions();
  Matrix psi = init.scaling ? *init.scaling : Matrix::Ones(p_count, n);
  std::vector<Matrix> field;
  if (init.field) {
    field = *init.field;
  } else {
    field.resize(n_pixels);
    for (std::size_t i = 0; i < n_pixels; ++i) field[i] = m0 * psi.col(static_cast<Index>(i)).asDiagonal();
  }
  if (a.rows() != p_count || a.cols() != n || psi.rows() != p_count || psi.cols() != n ||
      field.size() != n_pixels) {
    throw DimensionError("elmm_unmix: initialization shape mismatch");
  }

  // The scaling system for class p is lambda_m |m0_p|^2 I + lambda_psi Lap.
  const Eigen::SparseMatrix<double> lap = grid_laplacian(height, width);
  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();
  std::vector<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> psi_solvers(static_cast<std::size_t>(p_count));
  for (Index p = 0; p < p_count; ++p) {
    const Eigen::SparseMatrix<double> system =
        options.lambda_m * m0.col(p).squaredNorm() * identity + options.lambda_psi * lap;
    psi_solvers[static_cast<std::size_t>(p)].compute(system);
    if (psi_solvers[static_cast<std::size_t>(p)].info() != Eigen::Success) {
      throw RankError("elmm_unmix: scaling system factorization failed");
    }
  }

  auto cost = [&] {
    const double j = elmm_cost(image, m0, a, psi, field, options);
    if (!std::isfinite(j)) throw DivergenceError("elmm_unmix: non-finite cost");
    return j;
  };
  double current = cost();
  log.cost_history.push_back(current);
  log.converged = false;
  std::size_t rejected_steps = 0;

  for (std::size_t iter = 1; iter <= options.max_iters && current > 0.0; ++iter) {
    const double previous = current;

    // A-step: simplex-constrained least squares per pixel given M_n.
    {
      Matrix a_new = a;
      parallel_for(n_pixels, [&](std::size_t i) {
        const auto col = static_cast<Index>(i);
        const auto y = image.pixel(i);
        const Vector cand = fcls_pixel(field[i], y, options);
        if ((y - field[i] * cand).squaredNorm() <= (y - field[i] * a.col(col)).squaredNorm()) {
          a_new.col(col) = cand;
        }
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

    // M-step: ridge solution pulling M_n toward m0 diag(psi_n).
    {
      std::vector<Matrix> field_new = field;
      const Matrix ridge = options.lambda_m * Matrix::Identity(p_count, p_count);
      parallel_for(n_pixels, [&](std::size_t i) {
        const auto col = static_cast<Index>(i);
        const auto y = image.pixel(i);
        const Vector an = a.col(col);
        const Matrix target = m0 * psi.col(col).asDiagonal();
        const Matrix rhs = y * an.transpose() + options.lambda_m * target;
        const Matrix lhs = an * an.transpose() + ridge;
        Matrix cand = lhs.llt().solve(rhs.transpose()).transpose();
        const double before = (y - field[i] * an).squaredNorm() + options.lambda_m * (field[i] - target).squaredNorm();
        const double after = (y - cand * an).squaredNorm() + options.lambda_m * (cand - target).squaredNorm();
        if (cand.allFinite() && after <= before) field_new[i] = std::move(cand);
      });
      std::swap(field, field_new);
      const double j = cost();
      if (j > current) {
        std::swap(field, field_new);
        ++rejected_steps;
      } else {
        current = j;
      }
    }

    // Psi-step: one sparse linear solve per class, then the positivity clamp.
    {
      const Matrix psi_old = psi;
      for (Index p = 0; p < p_count; ++p) {
        Vector rhs(n);
        for (Index i = 0; i < n; ++i) {
          rhs(i) = options.lambda_m * m0.col(p).dot(field[static_cast<std::size_t>(i)].col(p));
        }
        const Vector target = psi_solvers[static_cast<std::size_t>(p)].solve(rhs);
        const Vector old = psi_old.row(p).transpose();
        const double old_cost = class_cost(field, m0, old, p, height, width, options);
        Vector cand = target.cwiseMax(1e-6);
        if (class_cost(field, m0, cand, p, height, width, options) > old_cost) {
          // The clamp overshot; retreat along the segment toward the old iterate.
          const Vector step = target - old;
          bool accepted = false;
          double t = 1.0;
          for (int halving = 0; halving < 5 && !accepted; ++halving) {
            t *= 0.5;
            cand = (old + t * step).cwiseMax(1e-6);
            accepted = class_cost(field, m0, cand, p, height, width, options) <= old_cost;
          }
          if (!accepted) {
            cand = old;
            ++rejected_steps;
          }
        }
        psi.row(p) = cand.transpose();
      }
      const double j = cost();
      if (j > current) {
        psi = psi_old;
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

  // Emitted field: nonnegative when m0 is a reflectance matrix.
  const bool reflectance = (m0.array() >= 0.0).all();
  std::vector<Matrix> emitted = field;
  Matrix reconstruction(bands, n);
  for (std::size_t i = 0; i < n_pixels; ++i) {
    if (reflectance) emitted[i] = emitted[i].cwiseMax(0.0);
    reconstruction.col(static_cast<Index>(i)) = emitted[i] * a.col(static_cast<Index>(i));
  }
  auto re = detail::per_pixel_re(image.data(), reconstruction);
  log.wall_seconds = clock.seconds();
  return UnmixingResult{AbundanceMap(std::move(a), std::move(class_names), true),
                        EndmemberField(std::move(emitted),
                                       reflectance ? SignalDomain::reflectance : SignalDomain::transformed),
                        std::nullopt,
                        std::move(re),
                        std::move(reconstruction),
                        std::nullopt,
                        std::move(psi),
                        {},
                        std::move(log)};
}

}  // namespace varimix
