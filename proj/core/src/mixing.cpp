#include "varimix/mixing.hpp"

#include <cmath>

#include "varimix/errors.hpp"
#include "varimix/parallel.hpp"
#include "varimix/random.hpp"

namespace varimix {

SpectralImage mix_forward(const EndmemberField& endmembers, const AbundanceMap& abundances,
                          std::size_t height, std::size_t width, const std::string& name) {
  if (endmembers.pixels() != abundances.pixels()) {
    throw DimensionError("mix_forward: endmember field has " +
                         std::to_string(endmembers.pixels()) + " pixels, abundances have " +
                         std::to_string(abundances.pixels()));
  }
  if (endmembers.classes() != abundances.classes()) {
    throw DimensionError("mix_forward: class count mismatch");
  }
  if (height * width != abundances.pixels()) {
    throw DimensionError("mix_forward: height * width differs from pixel count");
  }
  const auto n_pixels = abundances.pixels();
  Matrix y(static_cast<Eigen::Index>(endmembers.bands()), static_cast<Eigen::Index>(n_pixels));
  parallel_for(n_pixels, [&](std::size_t n) {
    y.col(static_cast<Eigen::Index>(n)).noalias() = endmembers.at(n) * abundances.pixel(n);
  });
  return SpectralImage(name, height, width, std::move(y));
}

SpectralImage mix_forward(const EndmemberField& endmembers, const AbundanceMap& abundances) {
  return mix_forward(endmembers, abundances, 1, abundances.pixels());
}

double noise_variance_for_snr(const SpectralImage& image, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  if (!std::isfinite(snr_db)) throw DomainError("add_noise: snr_db must be finite or +inf");
  const double signal_power = image.data().squaredNorm() / static_cast<double>(image.data().size());
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

SpectralImage add_noise(const SpectralImage& image, double snr_db, std::uint64_t seed) {
  const double variance = noise_variance_for_snr(image, snr_db);
  if (variance == 0.0) return image;
  Rng rng = make_rng(seed, {stream::kNoise});
  std::normal_distribution<double> gauss(0.0, std::sqrt(variance));
  Matrix noisy = image.data();
  // Sequential draw in storage order so results never depend on threading.
  double* data = noisy.data();
  for (Eigen::Index i = 0; i < noisy.size(); ++i) data[i] += gauss(rng);
  return image.with_data(std::move(noisy));
}

double empirical_snr_db(const SpectralImage& clean, const SpectralImage& noisy) {
  if (clean.data().rows() != noisy.data().rows() || clean.data().cols() != noisy.data().cols()) {
    throw DimensionError("empirical_snr_db: shape mismatch");
  }
  const double noise = (noisy.data() - clean.data()).squaredNorm();
  return 10.0 * std::log10(clean.data().squaredNorm() / noise);
}

}  // namespace varimix
