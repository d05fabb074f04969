#pragma once

// Library reduction, same-class pruning and spectral transformations applied
// before unmixing.

#include <string>
#include <utility>
#include <vector>

#include "varimix/types.hpp"

namespace varimix {

/// Affine map x -> W x + b applied to every pixel and every library signature.
class SpectralTransform {
 public:
  enum class Kind { weights, mask, dense };

  /// Diagonal band weighting (nonnegative weights, length L).
  static SpectralTransform band_weights(const Vector& weights);
  /// Band selection; keeps the bands whose mask entry is true, in order.
  static SpectralTransform band_mask(const std::vector<bool>& mask);
  /// General d x L matrix, e.g. FDA. Requires full row rank.
  static SpectralTransform dense(Matrix matrix, Vector offset = Vector());

  Kind kind() const noexcept { return kind_; }
  std::size_t input_bands() const noexcept { return static_cast<std::size_t>(matrix_.cols()); }
  std::size_t output_bands() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  const Matrix& matrix() const noexcept { return matrix_; }
  const Vector& offset() const noexcept { return offset_; }
  /// Mask entries (mask transforms) or empty.
  const std::vector<bool>& mask() const noexcept { return mask_; }
  /// Diagonal weights (weights transforms) or empty.
  const Vector& weights() const noexcept { return weights_; }
  /// True when outputs of nonnegative inputs stay nonnegative.
  bool preserves_reflectance() const;

  /// Applies the map to each column of an L x n matrix.
  Matrix apply(const Matrix& columns) const;

  std::string to_json() const;
  static SpectralTransform from_json(const std::string& text);

 private:
  SpectralTransform(Kind kind, Matrix matrix, Vector offset)
      : kind_(kind), matrix_(std::move(matrix)), offset_(std::move(offset)) {}

  Kind kind_;
  Matrix matrix_;
  Vector offset_;
  std::vector<bool> mask_;
  Vector weights_;
};

/// Per band: mean within-class variance over mean-class variance (population
/// variances). A zero between-class variance yields +infinity.
/// Throws DomainError for a single-class library.
Vector instability_index(const SpectralLibrary& library);

struct BandSelection {
  SpectralTransform transform;
  std::vector<std::size_t> bands;  // kept bands, ascending
  std::vector<std::string> warnings;
};

/// Keep the k bands with the lowest instability index (ties: lower band).
BandSelection select_stable_bands(const SpectralLibrary& library, std::size_t k);
/// Keep every band whose instability index is <= threshold.
BandSelection select_stable_bands_below(const SpectralLibrary& library, double threshold);

/// Diagonal weights 1 / (1 + instability), zero where the index is infinite.
SpectralTransform stable_band_weights(const SpectralLibrary& library);

/// Fisher discriminant transform with d rows: the leading generalized
/// eigenvectors of (S_between, S_within + eps I), where S_within is the pooled
/// within-class scatter and S_between the covariance of class means.
/// Throws RankError when d > P - 1 or the class means coincide.
SpectralTransform fda_transform(const SpectralLibrary& library, std::size_t dims);

/// Applies t to every pixel and every signature.
std::pair<SpectralImage, SpectralLibrary> apply_transform(const SpectralTransform& t,
                                                          const SpectralImage& image,
                                                          const SpectralLibrary& library);
SpectralImage apply_transform(const SpectralTransform& t, const SpectralImage& image);
SpectralLibrary apply_transform(const SpectralTransform& t, const SpectralLibrary& library);

enum class CoverageMetric { spectral_angle, squared_error };

/// Greedy per-class set cover: repeatedly keep the candidate that covers the
/// most not-yet-covered signatures of its class, until all are covered or
/// target_per_class are kept (0 means no cap). With squared_error the threshold bounds the
/// per-band RMSE between signatures.
SpectralLibrary count_based_reduce(const SpectralLibrary& library, double threshold,
                                   std::size_t target_per_class,
                                   CoverageMetric metric = CoverageMetric::spectral_angle);

struct PruneResult {
  SpectralLibrary library;
  std::vector<double> residuals;  // per flattened input signature
  std::vector<bool> kept;         // per flattened input signature
  std::vector<std::string> warnings;
};

/// Drops signatures far from the leading k-dimensional subspace of the
/// mean-removed image. Residual = ||(I - UU')(m - mean)|| / ||m - mean||.
/// The last signature of a class is never dropped.
PruneResult music_prune(const SpectralLibrary& library, const SpectralImage& image,
                        std::size_t subspace_dim, double residual_threshold);

}  // namespace varimix
