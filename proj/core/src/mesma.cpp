#include <limits>

#include "solver_common.hpp"
#include "varimix/parallel.hpp"

namespace varimix {

UnmixingResult mesma(const SpectralImage& image, const SpectralLibrary& library,
                     const SolverOptions& options) {
  detail::Stopwatch clock;
  using Index = Eigen::Index;
  if (library.bands() != image.bands()) throw DimensionError("mesma: band count mismatch");
  const std::uint64_t models = library.model_count();
  if (models > options.mesma_budget) {
    throw BudgetError("mesma: " + std::to_string(models) + " candidate models exceed the budget of " +
                      std::to_string(options.mesma_budget) +
                      "; prune the library (count-based or MUSIC) first");
  }
  const FlatLibrary flat = library.flatten();
  const auto p_count = static_cast<Index>(library.classes());
  const Index bands = flat.columns.rows();
  const Matrix flat_gram = flat.columns.transpose() * flat.columns;
  const Matrix flat_linear = flat.columns.transpose() * image.data();

  std::vector<std::size_t> sizes(library.classes());
  for (std::size_t p = 0; p < sizes.size(); ++p) {
    sizes[p] = static_cast<std::size_t>(library.bundle(p).signatures.cols());
  }

  const auto n_pixels = image.pixels();
  Matrix abundances(p_count, static_cast<Index>(n_pixels));
  IndexMatrix selected(p_count, static_cast<Index>(n_pixels));
  std::vector<double> best_re(n_pixels);

  parallel_for(n_pixels, [&](std::size_t n) {
    const auto px = static_cast<Index>(n);
    const auto y = image.pixel(n);
    std::vector<std::size_t> digit(sizes.size(), 0);  // lexicographic model counter
    std::vector<Index> columns(sizes.size());
    Matrix gram(p_count, p_count);
    Vector linear(p_count);
    Vector residual(bands);
    double best = std::numeric_limits<double>::infinity();
    Vector best_a;
    std::vector<std::size_t> best_digit;
    for (std::uint64_t model = 0; model < models; ++model) {
      for (Index p = 0; p < p_count; ++p) {
        columns[static_cast<std::size_t>(p)] =
            static_cast<Index>(flat.offsets[static_cast<std::size_t>(p)] + digit[static_cast<std::size_t>(p)]);
      }
      for (Index i = 0; i < p_count; ++i) {
        linear(i) = flat_linear(columns[static_cast<std::size_t>(i)], px);
        for (Index j = 0; j < p_count; ++j) {
          gram(i, j) = flat_gram(columns[static_cast<std::size_t>(i)], columns[static_cast<std::size_t>(j)]);
        }
      }
      const Vector a = detail::solve_simplex_ls(gram, linear, options);
      residual = y;
      for (Index p = 0; p < p_count; ++p) residual -= a(p) * flat.columns.col(columns[static_cast<std::size_t>(p)]);
      const double re = std::sqrt(residual.squaredNorm() / static_cast<double>(bands));
      if (re < best) {  // strict: the earliest (lexicographically smallest) tuple wins ties
        best = re;
        best_a = a;
        best_digit = digit;
      }
      if (options.re_threshold && best < *options.re_threshold) break;
      // advance the mixed-radix counter, last class fastest
      for (std::size_t p = sizes.size(); p-- > 0;) {
        if (++digit[p] < sizes[p]) break;
        digit[p] = 0;
      }
    }
    abundances.col(px) = best_a;
    for (Index p = 0; p < p_count; ++p) selected(p, px) = best_digit[static_cast<std::size_t>(p)];
    best_re[n] = best;
  });

  std::vector<Matrix> field(n_pixels);
  Matrix reconstruction(bands, static_cast<Index>(n_pixels));
  for (std::size_t n = 0; n < n_pixels; ++n) {
    Matrix m(bands, p_count);
    for (Index p = 0; p < p_count; ++p) {
      m.col(p) = library.bundle(static_cast<std::size_t>(p)).signatures.col(static_cast<Index>(selected(p, static_cast<Index>(n))));
    }
    reconstruction.col(static_cast<Index>(n)) = m * abundances.col(static_cast<Index>(n));
    field[n] = std::move(m);
  }
  SolverLog log;
  log.iterations = static_cast<std::size_t>(models);
  log.final_cost = (image.data() - reconstruction).squaredNorm();
  auto re = detail::per_pixel_re(image.data(), reconstruction);
  log.wall_seconds = clock.seconds();
  return UnmixingResult{AbundanceMap(std::move(abundances), library.class_names(), true),
                        EndmemberField(std::move(field), library.domain()),
                        std::move(selected),
                        std::move(re),
                        std::move(reconstruction),
                        std::nullopt,
                        std::nullopt,
                        {},
                        std::move(log)};
}

}  // namespace varimix
