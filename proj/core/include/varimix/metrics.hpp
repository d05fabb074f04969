#pragma once

#include "varimix/types.hpp"

namespace varimix {

/// sqrt(||X - Xhat||_F^2 / numel). Throws DimensionError on shape mismatch.
double rmse(const Matrix& x, const Matrix& x_hat);

/// Angle in radians between two spectra; cosine clamped to [-1, 1].
/// Throws DegenerateError for a zero-norm input.
double spectral_angle(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

enum class SamNormalization {
  /// Sum of angles divided by L * P * N, as in the published benchmark.
  bands_classes_pixels,
  /// Conventional mean angle over the P * N signature pairs.
  per_pair,
};

/// Mean spectral angle between matching columns of two endmember fields.
double sam_field(const EndmemberField& truth, const EndmemberField& estimate,
                 SamNormalization normalization = SamNormalization::bands_classes_pixels);

/// RMSE over all entries of two endmember fields.
double rmse_field(const EndmemberField& truth, const EndmemberField& estimate);

}  // namespace varimix
