#pragma once

#include <cstdint>
#include <string>

#include "varimix/types.hpp"

namespace varimix {

/// Per-pixel linear mixing: pixel n of the result is M_n a_n. No noise.
SpectralImage mix_forward(const EndmemberField& endmembers, const AbundanceMap& abundances,
                          std::size_t height, std::size_t width,
                          const std::string& name = "mixed");

/// Convenience overload producing a 1 x N image.
SpectralImage mix_forward(const EndmemberField& endmembers, const AbundanceMap& abundances);

/// Noise variance for a given SNR: mean of squared image values / 10^(snr/10).
double noise_variance_for_snr(const SpectralImage& image, double snr_db);

/// Adds i.i.d. zero-mean white Gaussian noise reaching the requested SNR.
/// snr_db = kNoiseless (+inf) returns the image unchanged.
SpectralImage add_noise(const SpectralImage& image, double snr_db, std::uint64_t seed);

/// 10 log10(||clean||_F^2 / ||noisy - clean||_F^2).
double empirical_snr_db(const SpectralImage& clean, const SpectralImage& noisy);

}  // namespace varimix
