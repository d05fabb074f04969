#include <algorithm>
#include <limits>
#include <string>

#include "solver_common.hpp"
#include "varimix/parallel.hpp"

namespace varimix {
namespace {

using Index = Eigen::Index;

// Largest KKT violation of the nonnegative lasso at x, relative to max(1, |q|_inf).
double lasso_kkt(const Matrix& h, const Vector& q, const Vector& x) {
  const Vector g = h * x - q;
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) < 0.0) worst = std::max(worst, -x(i));
    worst = std::max(worst, x(i) > 0.0 ? std::abs(g(i)) : -g(i));
  }
  return worst / std::max(1.0, q.cwiseAbs().maxCoeff());
}

// Re-solve the stationarity system on the ADMM support to remove the
// residual splitting error; accept only if the result is feasible.
Vector polish(const Matrix& h, const Vector& q, const Vector& z) {
  std::vector<Index> support;
  for (Index i = 0; i < z.size(); ++i) {
    if (z(i) > 0.0) support.push_back(i);
  }
  Vector x = Vector::Zero(z.size());
  if (support.empty()) return x;
  const auto s = static_cast<Index>(support.size());
  Matrix hs(s, s);
  Vector qs(s);
  for (Index i = 0; i < s; ++i) {
    qs(i) = q(support[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < s; ++j) hs(i, j) = h(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
  }
  const Vector xs = hs.ldlt().solve(qs);
  if (!xs.allFinite() || (xs.array() < 0.0).any()) return z;
  for (Index i = 0; i < s; ++i) x(support[static_cast<std::size_t>(i)]) = xs(i);
  return x;
}

// Re-solve on the support of x from the library columns themselves instead
// of the Gram matrix, which squares the conditioning of nearly collinear
// variants. Kept only when feasible and not worse in the objective.
Vector refine_on_columns(const Matrix& columns, const Eigen::Ref<const Vector>& y, double lambda, const Vector& x) {
  std::vector<Index> support;
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) > 0.0) support.push_back(i);
  }
  if (support.empty()) return x;
  const auto s = static_cast<Index>(support.size());
  Matrix ms(columns.rows(), s);
  for (Index i = 0; i < s; ++i) ms.col(i) = columns.col(support[static_cast<std::size_t>(i)]);
  // 1/2||y - Mx||^2 + lambda 1'x = 1/2||(y - w) - Mx||^2 + const whenever M'w = lambda 1
  Vector target = y;
  if (lambda != 0.0) {
    const Vector w = ms.transpose().completeOrthogonalDecomposition().solve(Vector::Constant(s, lambda));
    if ((ms.transpose() * w - Vector::Constant(s, lambda)).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, lambda)) return x;
    target -= w;
  }
  const Vector xs = ms.completeOrthogonalDecomposition().solve(target);
  if (!xs.allFinite() || (xs.array() < 0.0).any()) return x;
  Vector out = Vector::Zero(x.size());
  for (Index i = 0; i < s; ++i) out(support[static_cast<std::size_t>(i)]) = xs(i);
  auto objective = [&](const Vector& v) { return 0.5 * (y - columns * v).squaredNorm() + lambda * v.sum(); };
  return objective(out) <= objective(x) ? out : x;
}

// Nonnegative lasso  min 1/2 x'Hx - q'x  s.t. x >= 0  by ADMM on the split
// x = z. The x-update reuses one Cholesky factor of H + rho I. Every
// kPolishEvery iterations the support of z is polished; once the polished
// point satisfies the KKT conditions the iteration stops early.
struct LassoAdmm {
  static constexpr std::size_t kPolishEvery = 10;
  const Matrix& h;
  Eigen::LLT<Matrix> factor;
  double rho;

  LassoAdmm(const Matrix& h_in, double rho_in) : h(h_in), rho(rho_in) {
    factor.compute(h + rho * Matrix::Identity(h.rows(), h.cols()));
  }

  Vector solve(const Vector& q, std::size_t max_iters, double tol, std::size_t& iters) const {
    const Index t = q.size();
    Vector z = Vector::Zero(t), u = Vector::Zero(t), x(t), z_old(t);
    for (iters = 1; iters <= max_iters; ++iters) {
      x = factor.solve(q + rho * (z - u));
      z_old = z;
      z = (x + u).cwiseMax(0.0);
      u += x - z;
      const double primal = (x - z).norm();
      const double dual = rho * (z - z_old).norm();
      const double scale = std::max({1.0, x.norm(), z.norm()});
      if (primal <= tol * scale && dual <= tol * std::max(1.0, rho * u.norm())) break;
      if (iters % kPolishEvery == 0) {
        Vector p = polish(h, q, z);
        if (lasso_kkt(h, q, p) <= tol) return p;
      }
    }
    return polish(h, q, z);
  }
};

struct Collapsed {
  Matrix abundances;                 // P x N, rows normalized
  std::vector<Matrix> field;         // per-pixel L x P proxies
  Matrix reconstruction;             // L x N
  std::vector<std::size_t> zero_mass;
};

// Sum column abundances within each class, normalize each pixel to unit
// mass, and build per-pixel proxy endmembers as abundance-weighted class means.
Collapsed collapse(const FlatLibrary& flat, const Matrix& columns_abund) {
  const auto p_count = static_cast<Index>(flat.class_names.size());
  const Index n_pixels = columns_abund.cols();
  const Index bands = flat.columns.rows();
  Matrix plain_means(bands, p_count);
  for (Index p = 0; p < p_count; ++p) {
    const auto lo = static_cast<Index>(flat.offsets[static_cast<std::size_t>(p)]);
    const auto hi = static_cast<Index>(flat.offsets[static_cast<std::size_t>(p) + 1]);
    plain_means.col(p) = flat.columns.middleCols(lo, hi - lo).rowwise().mean();
  }
  Collapsed out{Matrix(p_count, n_pixels), std::vector<Matrix>(static_cast<std::size_t>(n_pixels)),
                Matrix(bands, n_pixels), {}};
  for (Index n = 0; n < n_pixels; ++n) {
    Matrix proxy(bands, p_count);
    Vector mass(p_count);
    for (Index p = 0; p < p_count; ++p) {
      const auto lo = static_cast<Index>(flat.offsets[static_cast<std::size_t>(p)]);
      const auto hi = static_cast<Index>(flat.offsets[static_cast<std::size_t>(p) + 1]);
      const auto w = columns_abund.col(n).segment(lo, hi - lo);
      mass(p) = w.sum();
      if (mass(p) > 0.0) {
        proxy.col(p) = flat.columns.middleCols(lo, hi - lo) * w / mass(p);
      } else {
        proxy.col(p) = plain_means.col(p);
      }
    }
    const double total = mass.sum();
    if (total <= 1e-9) {
      out.abundances.col(n).setConstant(1.0 / static_cast<double>(p_count));
      out.zero_mass.push_back(static_cast<std::size_t>(n));
    } else {
      out.abundances.col(n) = mass / total;
    }
    out.reconstruction.col(n) = proxy * out.abundances.col(n);
    out.field[static_cast<std::size_t>(n)] = std::move(proxy);
  }
  return out;
}

UnmixingResult package(const SpectralImage& image, const SpectralLibrary& library,
                       const FlatLibrary& flat, Matrix columns_abund, SolverLog log,
                       const detail::Stopwatch& clock) {
  Collapsed c = collapse(flat, columns_abund);
  if (!c.zero_mass.empty()) {
    log.warnings.push_back(std::to_string(c.zero_mass.size()) +
                           " pixel(s) with zero abundance mass reported as uniform");
  }
  auto re = detail::per_pixel_re(image.data(), c.reconstruction);
  log.final_cost = (image.data() - c.reconstruction).squaredNorm();
  log.wall_seconds = clock.seconds();
  return UnmixingResult{AbundanceMap(std::move(c.abundances), library.class_names(), true),
                        EndmemberField(std::move(c.field), library.domain()),
                        std::nullopt,
                        std::move(re),
                        std::move(c.reconstruction),
                        std::move(columns_abund),
                        std::nullopt,
                        std::move(c.zero_mass),
                        std::move(log)};
}

void check_library(const SpectralImage& image, const SpectralLibrary& library, const char* who) {
  if (library.bands() != image.bands()) {
    throw DimensionError(std::string(who) + ": library has " + std::to_string(library.bands()) +
                         " bands, image has " + std::to_string(image.bands()));
  }
}

// FCLS restricted to the given columns; returns the full-length column vector.
Vector fcls_on_support(const Matrix& gram, const Matrix& linear, Index px,
                       const std::vector<Index>& support, const SolverOptions& options) {
  const auto s = static_cast<Index>(support.size());
  Matrix gs(s, s);
  Vector cs(s);
  for (Index i = 0; i < s; ++i) {
    cs(i) = linear(support[static_cast<std::size_t>(i)], px);
    for (Index j = 0; j < s; ++j) gs(i, j) = gram(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
  }
  const Vector a = detail::solve_simplex_ls(gs, cs, options);
  Vector full = Vector::Zero(gram.rows());
  for (Index i = 0; i < s; ++i) full(support[static_cast<std::size_t>(i)]) = a(i);
  return full;
}

double residual_norm2(const Matrix& columns, const Eigen::Ref<const Vector>& y, const Vector& a) {
  return (y - columns * a).squaredNorm();
}

}  // namespace

UnmixingResult sparse_su_l1(const SpectralImage& image, const SpectralLibrary& library,
                            const SolverOptions& options) {
  detail::Stopwatch clock;
  check_library(image, library, "sparse_su_l1");
  if (!(options.lambda_sparse >= 0.0)) throw DomainError("sparse_su_l1: lambda must be >= 0");
  const FlatLibrary flat = library.flatten();
  const Matrix gram = flat.columns.transpose() * flat.columns;
  const Matrix linear = flat.columns.transpose() * image.data();
  const Index t = gram.rows();
  const double rho = options.rho > 0.0 ? options.rho : std::max(gram.trace() / static_cast<double>(t), 1e-12);
  const LassoAdmm admm(gram, rho);

  const auto n_pixels = image.pixels();
  Matrix columns_abund(t, static_cast<Index>(n_pixels));
  std::vector<std::size_t> iterations(n_pixels, 0);
  std::vector<char> fallback(n_pixels, 0);
  parallel_for(n_pixels, [&](std::size_t n) {
    const auto px = static_cast<Index>(n);
    const Vector q = linear.col(px).array() - options.lambda_sparse;
    std::size_t iters = 0;
    Vector x = admm.solve(q, options.sparse_max_iters, options.sparse_tol, iters);
    if (lasso_kkt(gram, q, x) > options.sparse_tol) {
      // The splitting iteration stalled short of the target accuracy;
      // finish with the exact active-set method.
      x = solve_nonneg_qp(gram, q, false).x;
      fallback[n] = 1;
    }
    x = refine_on_columns(flat.columns, image.pixel(n), options.lambda_sparse, x);
    iterations[n] = iters;
    columns_abund.col(px) = x;
  });

  SolverLog log;
  log.iterations = *std::max_element(iterations.begin(), iterations.end());
  const auto fallbacks = static_cast<std::size_t>(std::count(fallback.begin(), fallback.end(), 1));
  if (fallbacks > 0) {
    log.warnings.push_back(std::to_string(fallbacks) +
                           " pixel(s) finished with the active-set solver");
  }
  log.warnings.push_back("sparse_su_l1: class abundances are row-normalized column sums");
  return package(image, library, flat, std::move(columns_abund), std::move(log), clock);
}

UnmixingResult sparse_su_l0(const SpectralImage& image, const SpectralLibrary& library,
                            const SolverOptions& options) {
  detail::Stopwatch clock;
  check_library(image, library, "sparse_su_l0");
  const std::size_t k_max = options.l0_max_nonzeros;
  if (k_max == 0) throw DomainError("sparse_su_l0: K must be >= 1");
  const FlatLibrary flat = library.flatten();
  const Matrix gram = flat.columns.transpose() * flat.columns;
  const Matrix linear = flat.columns.transpose() * image.data();
  const Index t = gram.rows();
  const std::size_t k = std::min<std::size_t>(k_max, static_cast<std::size_t>(t));

  if (options.l0_mode == L0Mode::exhaustive) {
    // sum_{s=1..k} C(t, s), saturating
    long double total = 0.0L;
    long double c = 1.0L;
    for (std::size_t s = 1; s <= k; ++s) {
      c = c * static_cast<long double>(static_cast<std::size_t>(t) - s + 1) / static_cast<long double>(s);
      total += c;
    }
    if (total > static_cast<long double>(options.l0_budget)) {
      throw BudgetError("sparse_su_l0: " + std::to_string(static_cast<double>(total)) + " supports exceed the budget of " +
                        std::to_string(options.l0_budget) + "; reduce K or prune the library");
    }
  }

  const auto n_pixels = image.pixels();
  Matrix columns_abund(t, static_cast<Index>(n_pixels));
  parallel_for(n_pixels, [&](std::size_t n) {
    const auto px = static_cast<Index>(n);
    const auto y = image.pixel(n);
    if (options.l0_mode == L0Mode::exhaustive) {
      double best = std::numeric_limits<double>::infinity();
      Vector best_a = Vector::Zero(t);
      for (std::size_t s = 1; s <= k; ++s) {
        std::vector<Index> support(s);
        for (std::size_t i = 0; i < s; ++i) support[i] = static_cast<Index>(i);
        while (true) {
          Vector a = fcls_on_support(gram, linear, px, support, options);
          const double r = residual_norm2(flat.columns, y, a);
          if (r < best) {
            best = r;
            best_a = std::move(a);
          }
          // next combination in lexicographic order
          std::size_t i = s;
          while (i > 0 && support[i - 1] == t - static_cast<Index>(s - i) - 1) --i;
          if (i == 0) break;
          ++support[i - 1];
          for (std::size_t j = i; j < s; ++j) support[j] = support[j - 1] + 1;
        }
      }
      columns_abund.col(px) = best_a;
      return;
    }
    // Greedy: nonnegative matching pursuit on normalized correlations,
    // nonnegative refit after each addition, simplex refit at the end.
    std::vector<Index> support;
    std::vector<char> used(static_cast<std::size_t>(t), 0);
    Vector residual = y;
    for (std::size_t step = 0; step < k; ++step) {
      const Vector corr = flat.columns.transpose() * residual;
      Index pick = -1;
      double best = 0.0;
      for (Index j = 0; j < t; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double norm = std::sqrt(gram(j, j));
        if (norm == 0.0) continue;
        const double score = corr(j) / norm;
        if (score > best) {
          best = score;
          pick = j;
        }
      }
      if (pick < 0) break;
      support.push_back(pick);
      used[static_cast<std::size_t>(pick)] = 1;
      const auto s = static_cast<Index>(support.size());
      Matrix gs(s, s);
      Vector cs(s);
      for (Index i = 0; i < s; ++i) {
        cs(i) = linear(support[static_cast<std::size_t>(i)], px);
        for (Index j = 0; j < s; ++j) gs(i, j) = gram(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
      }
      const Vector a = solve_nonneg_qp(gs, cs, false).x;
      residual = y;
      for (Index i = 0; i < s; ++i) residual -= a(i) * flat.columns.col(support[static_cast<std::size_t>(i)]);
    }
    if (support.empty()) {
      // nothing correlates positively: fall back to the best single column
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < t; ++j) {
        const double r = (y - flat.columns.col(j)).squaredNorm();
        if (r < best) {
          best = r;
          support.assign(1, j);
        }
      }
    }
    std::sort(support.begin(), support.end());
    columns_abund.col(px) = fcls_on_support(gram, linear, px, support, options);
  });

  SolverLog log;
  log.iterations = k;
  return package(image, library, flat, std::move(columns_abund), std::move(log), clock);
}

}  // namespace varimix
