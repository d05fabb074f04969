#include "varimix/library_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "varimix/errors.hpp"
#include "varimix/metrics.hpp"

namespace varimix {
namespace {

using Index = Eigen::Index;
constexpr double kInf = std::numeric_limits<double>::infinity();

BandSelection make_selection(std::size_t bands, std::vector<std::size_t> kept,
                             std::size_t classes) {
  std::sort(kept.begin(), kept.end());
  std::vector<bool> mask(bands, false);
  for (const auto b : kept) mask[b] = true;
  BandSelection sel{SpectralTransform::band_mask(mask), std::move(kept), {}};
  if (sel.bands.size() < classes) {
    sel.warnings.push_back("band selection keeps " + std::to_string(sel.bands.size()) +
                           " bands for " + std::to_string(classes) +
                           " classes: unmixing is underdetermined");
  }
  return sel;
}

}  // namespace

// ---------------------------------------------------------------- transform

SpectralTransform SpectralTransform::band_weights(const Vector& weights) {
  if (weights.size() == 0) throw DimensionError("band_weights: empty");
  if (!weights.allFinite() || weights.minCoeff() < 0.0) {
    throw DomainError("band_weights: weights must be finite and nonnegative");
  }
  SpectralTransform t(Kind::weights, weights.asDiagonal().toDenseMatrix(),
                      Vector::Zero(weights.size()));
  t.weights_ = weights;
  return t;
}

SpectralTransform SpectralTransform::band_mask(const std::vector<bool>& mask) {
  const auto kept = static_cast<Index>(std::count(mask.begin(), mask.end(), true));
  if (kept == 0) throw DimensionError("band_mask: mask keeps no band");
  Matrix m = Matrix::Zero(kept, static_cast<Index>(mask.size()));
  Index row = 0;
  for (std::size_t b = 0; b < mask.size(); ++b) {
    if (mask[b]) m(row++, static_cast<Index>(b)) = 1.0;
  }
  SpectralTransform t(Kind::mask, std::move(m), Vector::Zero(kept));
  t.mask_ = mask;
  return t;
}

SpectralTransform SpectralTransform::dense(Matrix matrix, Vector offset) {
  if (matrix.rows() == 0 || matrix.cols() == 0) throw DimensionError("dense transform: empty");
  if (!matrix.allFinite()) throw DomainError("dense transform: non-finite entry");
  if (offset.size() == 0) offset = Vector::Zero(matrix.rows());
  if (offset.size() != matrix.rows()) throw DimensionError("dense transform: offset length");
  Eigen::ColPivHouseholderQR<Matrix> qr(matrix.transpose());
  if (qr.rank() < matrix.rows()) throw RankError("dense transform: matrix lacks full row rank");
  return SpectralTransform(Kind::dense, std::move(matrix), std::move(offset));
}

bool SpectralTransform::preserves_reflectance() const {
  return kind_ != Kind::dense && offset_.minCoeff() >= 0.0;
}

Matrix SpectralTransform::apply(const Matrix& columns) const {
  if (static_cast<std::size_t>(columns.rows()) != input_bands()) {
    throw DimensionError("transform expects " + std::to_string(input_bands()) + " bands, got " +
                         std::to_string(columns.rows()));
  }
  if (kind_ == Kind::mask) {
    Matrix out(matrix_.rows(), columns.cols());
    Index row = 0;
    for (std::size_t b = 0; b < mask_.size(); ++b) {
      if (mask_[b]) out.row(row++) = columns.row(static_cast<Index>(b));
    }
    return out;
  }
  if (kind_ == Kind::weights) return weights_.asDiagonal() * columns;
  return (matrix_ * columns).colwise() + offset_;
}

std::string SpectralTransform::to_json() const {
  nlohmann::json j;
  j["input_bands"] = input_bands();
  j["output_bands"] = output_bands();
  switch (kind_) {
    case Kind::mask: {
      j["kind"] = "mask";
      std::vector<int> m(mask_.begin(), mask_.end());
      j["mask"] = m;
      break;
    }
    case Kind::weights:
      j["kind"] = "weights";
      j["weights"] = std::vector<double>(weights_.data(), weights_.data() + weights_.size());
      break;
    case Kind::dense: {
      j["kind"] = "dense";
      auto rows = nlohmann::json::array();
      for (Index r = 0; r < matrix_.rows(); ++r) {
        const Vector row = matrix_.row(r).transpose();
        rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
      }
      j["matrix"] = rows;
      j["offset"] = std::vector<double>(offset_.data(), offset_.data() + offset_.size());
      break;
    }
  }
  return j.dump(2) + "\n";
}

SpectralTransform SpectralTransform::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const std::string kind = j.at("kind");
    if (kind == "mask") {
      const auto m = j.at("mask").get<std::vector<int>>();
      return band_mask(std::vector<bool>(m.begin(), m.end()));
    }
    if (kind == "weights") {
      const auto w = j.at("weights").get<std::vector<double>>();
      return band_weights(Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())));
    }
    if (kind == "dense" || kind == "fda") {
      const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw FormatError("transform: empty matrix");
      Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) throw FormatError("transform: ragged matrix");
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
      }
      Vector offset;
      if (j.contains("offset")) {
        const auto o = j["offset"].get<std::vector<double>>();
        offset = Eigen::Map<const Vector>(o.data(), static_cast<Index>(o.size()));
      }
      return dense(std::move(m), std::move(offset));
    }
    throw FormatError("transform: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed transform JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------- band selection

Vector instability_index(const SpectralLibrary& library) {
  const auto p_count = library.classes();
  if (p_count < 2) throw DomainError("instability_index: needs at least two classes");
  const auto bands = static_cast<Index>(library.bands());
  const Matrix means = library.class_means();
  Vector within = Vector::Zero(bands);
  for (const auto& b : library.bundles()) {
    const Vector mu = b.signatures.rowwise().mean();
    within += (b.signatures.colwise() - mu).rowwise().squaredNorm() /
              static_cast<double>(b.signatures.cols());
  }
  within /= static_cast<double>(p_count);
  const Vector grand = means.rowwise().mean();
  const Vector between = (means.colwise() - grand).rowwise().squaredNorm() /
                         static_cast<double>(p_count);
  Vector index(bands);
  for (Index b = 0; b < bands; ++b) {
    if (between(b) == 0.0) {
      index(b) = kInf;
    } else {
      index(b) = within(b) / between(b);
    }
  }
  return index;
}

BandSelection select_stable_bands(const SpectralLibrary& library, std::size_t k) {
  const Vector index = instability_index(library);
  const auto bands = static_cast<std::size_t>(index.size());
  if (k == 0) throw DomainError("select_stable_bands: k must be >= 1");
  k = std::min(k, bands);
  std::vector<std::size_t> order(bands);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return index(static_cast<Index>(a)) < index(static_cast<Index>(b));
  });
  order.resize(k);
  return make_selection(bands, std::move(order), library.classes());
}

BandSelection select_stable_bands_below(const SpectralLibrary& library, double threshold) {
  const Vector index = instability_index(library);
  std::vector<std::size_t> kept;
  for (Index b = 0; b < index.size(); ++b) {
    if (index(b) <= threshold) kept.push_back(static_cast<std::size_t>(b));
  }
  if (kept.empty()) throw DomainError("select_stable_bands_below: no band below threshold");
  return make_selection(static_cast<std::size_t>(index.size()), std::move(kept), library.classes());
}

SpectralTransform stable_band_weights(const SpectralLibrary& library) {
  const Vector index = instability_index(library);
  Vector w(index.size());
  for (Index b = 0; b < index.size(); ++b) w(b) = std::isinf(index(b)) ? 0.0 : 1.0 / (1.0 + index(b));
  return SpectralTransform::band_weights(w);
}

// ---------------------------------------------------------------- FDA

SpectralTransform fda_transform(const SpectralLibrary& library, std::size_t dims) {
  const auto p_count = library.classes();
  if (p_count < 2) throw RankError("fda_transform: needs at least two classes");
  if (dims == 0 || dims > p_count - 1) {
    throw RankError("fda_transform: dims must lie in [1, P - 1] = [1, " +
                    std::to_string(p_count - 1) + "]");
  }
  const auto bands = static_cast<Index>(library.bands());
  const Matrix means = library.class_means();
  Matrix within = Matrix::Zero(bands, bands);
  for (std::size_t p = 0; p < p_count; ++p) {
    const Matrix centered = library.bundle(p).signatures.colwise() - means.col(static_cast<Index>(p));
    within.noalias() += centered * centered.transpose();
  }
  const Matrix centered_means = means.colwise() - means.rowwise().mean();
  const Matrix between = centered_means * centered_means.transpose() / static_cast<double>(p_count);

  const double between_trace = between.trace();
  if (!(between_trace > 0.0)) throw RankError("fda_transform: class means coincide (S_between = 0)");
  double ridge = 1e-8 * within.trace() / static_cast<double>(bands);
  if (!(ridge > 0.0)) ridge = 1e-8 * between_trace / static_cast<double>(bands);
  within.diagonal().array() += ridge;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gen(between, within);
  if (gen.info() != Eigen::Success) throw RankError("fda_transform: generalized eigensolver failed");
  const Vector& values = gen.eigenvalues();
  const double top = values(bands - 1);
  Matrix w(static_cast<Index>(dims), bands);
  for (Index i = 0; i < static_cast<Index>(dims); ++i) {
    const double lambda = values(bands - 1 - i);
    if (!(lambda > 1e-12 * top)) {
      throw RankError("fda_transform: S_between has rank below the requested dimension");
    }
    w.row(i) = gen.eigenvectors().col(bands - 1 - i).transpose();
  }
  return SpectralTransform::dense(std::move(w));
}

// ---------------------------------------------------------------- apply

SpectralImage apply_transform(const SpectralTransform& t, const SpectralImage& image) {
  return image.with_data(t.apply(image.data()));
}

SpectralLibrary apply_transform(const SpectralTransform& t, const SpectralLibrary& library) {
  std::vector<SpectralBundle> bundles;
  bundles.reserve(library.classes());
  for (const auto& b : library.bundles()) bundles.push_back({b.name, t.apply(b.signatures)});
  const bool reflectance = library.domain() == SignalDomain::reflectance && t.preserves_reflectance();
  return SpectralLibrary(std::move(bundles),
                         reflectance ? SignalDomain::reflectance : SignalDomain::transformed);
}

std::pair<SpectralImage, SpectralLibrary> apply_transform(const SpectralTransform& t,
                                                          const SpectralImage& image,
                                                          const SpectralLibrary& library) {
  return {apply_transform(t, image), apply_transform(t, library)};
}

// ---------------------------------------------------------------- reduction

SpectralLibrary count_based_reduce(const SpectralLibrary& library, double threshold,
                                   std::size_t target_per_class, CoverageMetric metric) {
  if (!(threshold >= 0.0)) throw DomainError("count_based_reduce: threshold must be >= 0");
  const std::size_t cap = target_per_class == 0 ? std::numeric_limits<std::size_t>::max() : target_per_class;
  std::vector<SpectralBundle> out;
  for (const auto& bundle : library.bundles()) {
    const Matrix& s = bundle.signatures;
    const Index m = s.cols();
    // covers(i, j): candidate i represents signature j within the threshold.
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> covers(m, m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        const double d = metric == CoverageMetric::spectral_angle
                             ? spectral_angle(s.col(i), s.col(j))
                             : std::sqrt((s.col(i) - s.col(j)).squaredNorm() / static_cast<double>(s.rows()));
        covers(i, j) = i == j || d <= threshold;
      }
    }
    std::vector<bool> covered(static_cast<std::size_t>(m), false);
    std::vector<Index> picked;
    while (picked.size() < cap) {
      Index best = -1;
      Index best_gain = 0;
      for (Index i = 0; i < m; ++i) {
        Index gain = 0;
        for (Index j = 0; j < m; ++j) gain += covers(i, j) && !covered[static_cast<std::size_t>(j)];
        if (gain > best_gain) {
          best_gain = gain;
          best = i;
        }
      }
      if (best < 0) break;
      picked.push_back(best);
      for (Index j = 0; j < m; ++j) {
        if (covers(best, j)) covered[static_cast<std::size_t>(j)] = true;
      }
    }
    std::sort(picked.begin(), picked.end());
    Matrix kept(s.rows(), static_cast<Index>(picked.size()));
    for (std::size_t k = 0; k < picked.size(); ++k) kept.col(static_cast<Index>(k)) = s.col(picked[k]);
    out.push_back({bundle.name, std::move(kept)});
  }
  return SpectralLibrary(std::move(out), library.domain());
}

PruneResult music_prune(const SpectralLibrary& library, const SpectralImage& image,
                        std::size_t subspace_dim, double residual_threshold) {
  if (image.pixels() == 0) throw DimensionError("music_prune: empty image");
  if (library.bands() != image.bands()) throw DimensionError("music_prune: band count mismatch");
  if (subspace_dim == 0 || subspace_dim > std::min(image.bands(), image.pixels())) {
    throw DomainError("music_prune: subspace_dim must lie in [1, min(L, N)]");
  }
  if (!(residual_threshold > 0.0)) throw DomainError("music_prune: threshold must be > 0");

  const Vector mean = image.data().rowwise().mean();
  const Matrix centered = image.data().colwise() - mean;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered * centered.transpose());
  const auto bands = static_cast<Index>(image.bands());
  const auto k = static_cast<Index>(subspace_dim);
  const Matrix u = eig.eigenvectors().rightCols(k);

  std::vector<double> residuals;
  std::vector<bool> kept;
  std::vector<std::string> warnings;
  std::vector<SpectralBundle> out;
  for (const auto& bundle : library.bundles()) {
    const Matrix& s = bundle.signatures;
    std::vector<double> res(static_cast<std::size_t>(s.cols()));
    for (Index j = 0; j < s.cols(); ++j) {
      const Vector d = s.col(j) - mean;
      const double norm = d.norm();
      const Vector r = d - u * (u.transpose() * d);
      res[static_cast<std::size_t>(j)] = norm > 0.0 ? r.norm() / norm : 0.0;
    }
    std::vector<Index> keep;
    for (Index j = 0; j < s.cols(); ++j) {
      if (res[static_cast<std::size_t>(j)] <= residual_threshold) keep.push_back(j);
    }
    if (keep.empty()) {
      const auto best = std::min_element(res.begin(), res.end()) - res.begin();
      keep.push_back(static_cast<Index>(best));
      warnings.push_back("music_prune: kept the best signature of class '" + bundle.name +
                         "' although it exceeds the threshold");
    }
    Matrix kept_sigs(bands, static_cast<Index>(keep.size()));
    std::size_t next = 0;
    for (Index j = 0; j < s.cols(); ++j) {
      const bool keep_j = next < keep.size() && keep[next] == j;
      kept.push_back(keep_j);
      residuals.push_back(res[static_cast<std::size_t>(j)]);
      if (keep_j) kept_sigs.col(static_cast<Index>(next++)) = s.col(j);
    }
    out.push_back({bundle.name, std::move(kept_sigs)});
  }
  return PruneResult{SpectralLibrary(std::move(out), library.domain()), std::move(residuals),
                     std::move(kept), std::move(warnings)};
}

}  // namespace varimix
