#pragma once

// Ground-truthed synthetic scenes with per-pixel endmember variability.

#include <cstdint>
#include <string>
#include <vector>

#include "varimix/types.hpp"

namespace varimix {

struct Range {
  double lo = 1.0;
  double hi = 1.0;
};

enum class VariabilityMode { hapke, atmospheric, elmm_scaling, glmm_scaling, none };

VariabilityMode parse_variability_mode(const std::string& text);
std::string to_string(VariabilityMode mode);

/// How the K variants of one class are generated from its base signature.
struct ClassVariability {
  VariabilityMode mode = VariabilityMode::none;
  /// hapke: incidence and emergence cosines; atmospheric: mu1 only.
  Range mu1{0.5, 1.0};
  Range mu2{0.5, 1.0};
  /// atmospheric: calibration-panel cosine and illumination terms, held fixed.
  double mu2_fixed = 1.0;
  double e_sun = 1.0;
  double e_sky = 0.2;
  /// elmm_scaling: per-variant scalar factor.
  Range psi{0.8, 1.2};
  /// glmm_scaling: range of the per-band multiplier and the Gaussian
  /// smoothing width (in bands) applied to its logarithm.
  Range band_scale{0.85, 1.15};
  double band_smoothness = 10.0;
  std::size_t variants = 10;
};

struct VariabilityConfig {
  std::vector<ClassVariability> classes;  // one entry per class
  std::uint64_t seed = 0;

  void validate(std::size_t class_count) const;
};

enum class AbundanceGenerator { dirichlet, grf };

struct AbundanceFieldConfig {
  AbundanceGenerator generator = AbundanceGenerator::grf;
  std::size_t height = 50;
  std::size_t width = 50;
  std::vector<double> alpha;  // dirichlet; empty means all ones
  double correlation_length = 8.0;
  double sharpness = 0.2;
  double pure_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate(std::size_t class_count) const;
};

/// N i.i.d. Dirichlet(alpha) rows, then ceil(pure_fraction * N) random rows
/// replaced by random one-hot rows.
AbundanceMap sample_abundances_dirichlet(std::size_t pixels, const std::vector<double>& alpha,
                                         double pure_fraction, std::uint64_t seed,
                                         std::vector<std::string> class_names = {});

/// P white-noise fields blurred by an isotropic Gaussian (std dev =
/// correlation_length, reflective boundary), standardized, then mapped to the
/// simplex with a softmax at temperature `sharpness`. Pure-pixel injection as
/// in the Dirichlet sampler.
AbundanceMap sample_abundances_grf(std::size_t height, std::size_t width, std::size_t classes,
                                   double correlation_length, double sharpness,
                                   double pure_fraction, std::uint64_t seed,
                                   std::vector<std::string> class_names = {});

/// Simplified Hapke model (isotropic scattering, dense medium), per band:
/// w / ((1 + 2 mu1 sqrt(1 - w)) (1 + 2 mu2 sqrt(1 - w))).
Vector hapke_reflectance(const Vector& albedo, double mu1, double mu2);

/// Reflectance under a panel-calibrated atmosphere:
/// y_s (e_sun mu1 + e_sky) / (e_sun mu2 + e_sky).
Vector atmospheric_reflectance(const Vector& ground, double mu1, double mu2, double e_sun,
                               double e_sky);
/// Band-dependent illumination terms.
Vector atmospheric_reflectance(const Vector& ground, double mu1, double mu2,
                               const Vector& e_sun, const Vector& e_sky);

enum class ScalingMode { elmm, glmm };

/// K scaled copies of m0 as an L x K matrix: elmm multiplies by a scalar
/// psi_k ~ U(psi); glmm by a per-band vector whose log is a smoothed uniform
/// field over [log lo, log hi].
Matrix scaling_variants(const Vector& m0, ScalingMode mode, const ClassVariability& params,
                        std::uint64_t seed);

/// K variants of one base signature according to the class configuration.
Matrix generate_variants(const Vector& base, const ClassVariability& params, std::uint64_t seed);

struct SceneConfig {
  AbundanceFieldConfig abundances;
  VariabilityConfig variability;
  double snr_db = 30.0;
  std::uint64_t seed = 0;
};

/// Variants per class, a per-pixel uniform variant draw, abundances, mixing,
/// then noise. Deterministic in (configs, seed).
SceneTruth synthesize_scene(const SpectralLibrary& base_library, const SceneConfig& config);

/// Smooth analytic stand-ins for vegetation reflectance, soil single-scattering
/// albedo and water reflectance, sampled at L bands over 400-2500 nm.
SpectralLibrary reference_base_library(std::size_t bands);
std::vector<double> reference_wavelengths(std::size_t bands);

}  // namespace varimix
