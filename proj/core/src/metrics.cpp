#include "varimix/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "varimix/errors.hpp"

namespace varimix {

double rmse(const Matrix& x, const Matrix& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    throw DimensionError("rmse: shape mismatch");
  }
  if (x.size() == 0) throw DimensionError("rmse: empty input");
  return std::sqrt((x - x_hat).squaredNorm() / static_cast<double>(x.size()));
}

double spectral_angle(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw DimensionError("spectral_angle: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DegenerateError("spectral_angle: zero-norm signature");
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

double sam_field(const EndmemberField& truth, const EndmemberField& estimate,
                 SamNormalization normalization) {
  if (truth.pixels() != estimate.pixels() || truth.bands() != estimate.bands() ||
      truth.classes() != estimate.classes()) {
    throw DimensionError("sam_field: shape mismatch");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < truth.pixels(); ++n) {
    const Matrix& m = truth.at(n);
    const Matrix& m_hat = estimate.at(n);
    for (Eigen::Index p = 0; p < m.cols(); ++p) total += spectral_angle(m.col(p), m_hat.col(p));
  }
  double denom = static_cast<double>(truth.classes() * truth.pixels());
  if (normalization == SamNormalization::bands_classes_pixels) {
    denom *= static_cast<double>(truth.bands());
  }
  return total / denom;
}

double rmse_field(const EndmemberField& truth, const EndmemberField& estimate) {
  if (truth.pixels() != estimate.pixels() || truth.bands() != estimate.bands() ||
      truth.classes() != estimate.classes()) {
    throw DimensionError("rmse_field: shape mismatch");
  }
  double sq = 0.0;
  for (std::size_t n = 0; n < truth.pixels(); ++n) sq += (truth.at(n) - estimate.at(n)).squaredNorm();
  const double count = static_cast<double>(truth.pixels() * truth.bands() * truth.classes());
  return std::sqrt(sq / count);
}

}  // namespace varimix
