#include "varimix/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "varimix/errors.hpp"
#include "varimix/mixing.hpp"
#include "varimix/parallel.hpp"
#include "varimix/random.hpp"

namespace varimix {
namespace {

using Index = Eigen::Index;

void check_range(const Range& r, const char* what, double min_exclusive, double max_inclusive) {
  if (!(r.lo <= r.hi)) throw ConfigError(std::string(what) + ": empty range");
  if (!(r.lo > min_exclusive) || !(r.hi <= max_inclusive)) {
    throw ConfigError(std::string(what) + ": range outside the admissible interval");
  }
}

double uniform(Rng& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<long>(std::max(1.0, std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (auto& w : k) w /= total;
  return k;
}

// Mirror index into [0, n) with the edge sample repeated ("symmetric" padding).
long reflect(long i, long n) {
  const long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// In-place 1-D convolution of n samples spaced `stride` apart.
void blur_line(double* data, long n, long stride, const std::vector<double>& kernel,
               std::vector<double>& scratch) {
  const long radius = static_cast<long>(kernel.size() / 2);
  scratch.assign(static_cast<std::size_t>(n), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long k = -radius; k <= radius; ++k) {
      acc += kernel[static_cast<std::size_t>(k + radius)] * data[reflect(i + k, n) * stride];
    }
    scratch[static_cast<std::size_t>(i)] = acc;
  }
  for (long i = 0; i < n; ++i) data[i * stride] = scratch[static_cast<std::size_t>(i)];
}

std::size_t pure_pixel_count(double pure_fraction, std::size_t pixels) {
  if (pure_fraction <= 0.0) return 0;
  const double raw = pure_fraction * static_cast<double>(pixels);
  return std::min(pixels, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

void inject_pure_pixels(Matrix& fractions, double pure_fraction, std::uint64_t seed) {
  if (pure_fraction < 0.0 || pure_fraction >= 1.0) {
    throw DomainError("pure_fraction must lie in [0, 1)");
  }
  const auto pixels = static_cast<std::size_t>(fractions.cols());
  const std::size_t count = pure_pixel_count(pure_fraction, pixels);
  if (count == 0) return;
  Rng rng = make_rng(seed, {stream::kPurePixels});
  std::vector<std::size_t> idx(pixels);
  std::iota(idx.begin(), idx.end(), 0);
  std::uniform_int_distribution<std::size_t> pick_class(0, static_cast<std::size_t>(fractions.rows()) - 1);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pixels - 1);
    std::swap(idx[i], idx[pick(rng)]);
    const auto n = static_cast<Index>(idx[i]);
    fractions.col(n).setZero();
    fractions(static_cast<Index>(pick_class(rng)), n) = 1.0;
  }
}

}  // namespace

VariabilityMode parse_variability_mode(const std::string& text) {
  if (text == "hapke") return VariabilityMode::hapke;
  if (text == "atmospheric") return VariabilityMode::atmospheric;
  if (text == "elmm_scaling") return VariabilityMode::elmm_scaling;
  if (text == "glmm_scaling") return VariabilityMode::glmm_scaling;
  if (text == "none") return VariabilityMode::none;
  throw ConfigError("unknown variability mode '" + text + "'");
}

std::string to_string(VariabilityMode mode) {
  switch (mode) {
    case VariabilityMode::hapke: return "hapke";
    case VariabilityMode::atmospheric: return "atmospheric";
    case VariabilityMode::elmm_scaling: return "elmm_scaling";
    case VariabilityMode::glmm_scaling: return "glmm_scaling";
    case VariabilityMode::none: return "none";
  }
  return "none";
}

void VariabilityConfig::validate(std::size_t class_count) const {
  if (classes.size() != class_count) {
    throw ConfigError("variability config has " + std::to_string(classes.size()) +
                      " class entries, library has " + std::to_string(class_count));
  }
  for (const auto& c : classes) {
    if (c.variants == 0) throw ConfigError("variability: variants must be >= 1");
    switch (c.mode) {
      case VariabilityMode::hapke:
        check_range(c.mu1, "hapke mu1", 0.0, 1.0);
        check_range(c.mu2, "hapke mu2", 0.0, 1.0);
        break;
      case VariabilityMode::atmospheric:
        check_range(c.mu1, "atmospheric mu1", 0.0, 1.0);
        if (!(c.mu2_fixed > 0.0 && c.mu2_fixed <= 1.0)) throw ConfigError("atmospheric mu2 must be in (0, 1]");
        if (!(c.e_sun > 0.0) || !(c.e_sky > 0.0)) throw ConfigError("atmospheric e_sun, e_sky must be > 0");
        break;
      case VariabilityMode::elmm_scaling:
        check_range(c.psi, "elmm psi", 0.0, HUGE_VAL);
        break;
      case VariabilityMode::glmm_scaling:
        check_range(c.band_scale, "glmm band_scale", 0.0, HUGE_VAL);
        if (!(c.band_smoothness > 0.0)) throw ConfigError("glmm band_smoothness must be > 0");
        break;
      case VariabilityMode::none:
        break;
    }
  }
}

void AbundanceFieldConfig::validate(std::size_t class_count) const {
  if (height == 0 || width == 0) throw ConfigError("abundance field: empty geometry");
  if (pure_fraction < 0.0 || pure_fraction >= 1.0) throw ConfigError("pure_fraction must be in [0, 1)");
  if (generator == AbundanceGenerator::dirichlet) {
    if (!alpha.empty() && alpha.size() != class_count) {
      throw ConfigError("dirichlet alpha must have one entry per class");
    }
    for (const double a : alpha) {
      if (!(a > 0.0)) throw ConfigError("dirichlet alpha entries must be > 0");
    }
  } else {
    if (!(correlation_length >= 1.0)) throw ConfigError("grf correlation_length must be >= 1");
    if (!(sharpness > 0.0)) throw ConfigError("grf sharpness must be > 0");
    if (height < 4 || width < 4) throw ConfigError("grf needs height, width >= 4");
    if (!(correlation_length < static_cast<double>(std::min(height, width)))) {
      throw ConfigError("grf correlation_length must be below min(height, width)");
    }
  }
}

// ---------------------------------------------------------------- abundances

AbundanceMap sample_abundances_dirichlet(std::size_t pixels, const std::vector<double>& alpha,
                                         double pure_fraction, std::uint64_t seed,
                                         std::vector<std::string> class_names) {
  if (alpha.size() < 2) throw DomainError("dirichlet: need at least two classes");
  for (const double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("dirichlet: alpha must be positive");
  }
  if (pure_fraction < 0.0 || pure_fraction >= 1.0) throw DomainError("pure_fraction must lie in [0, 1)");
  const auto p_count = static_cast<Index>(alpha.size());
  Matrix fractions(p_count, static_cast<Index>(pixels));
  Rng rng = make_rng(seed, {stream::kAbundances});
  std::vector<std::gamma_distribution<double>> gammas;
  for (const double a : alpha) gammas.emplace_back(a, 1.0);
  for (Index n = 0; n < fractions.cols(); ++n) {
    double total = 0.0;
    for (Index p = 0; p < p_count; ++p) {
      fractions(p, n) = gammas[static_cast<std::size_t>(p)](rng);
      total += fractions(p, n);
    }
    if (total > 0.0) {
      fractions.col(n) /= total;
    } else {
      // Every gamma draw underflowed (tiny alpha): the limit is a vertex.
      fractions.col(n).setZero();
      fractions(static_cast<Index>(hashed_index(seed, {n}, static_cast<std::uint64_t>(p_count))), n) = 1.0;
    }
  }
  inject_pure_pixels(fractions, pure_fraction, seed);
  return AbundanceMap(std::move(fractions), std::move(class_names), true);
}

AbundanceMap sample_abundances_grf(std::size_t height, std::size_t width, std::size_t classes,
                                   double correlation_length, double sharpness,
                                   double pure_fraction, std::uint64_t seed,
                                   std::vector<std::string> class_names) {
  if (height < 4 || width < 4) throw DomainError("grf: height and width must be >= 4");
  if (classes < 2) throw DomainError("grf: need at least two classes");
  if (!(correlation_length >= 1.0) ||
      !(correlation_length < static_cast<double>(std::min(height, width)))) {
    throw DomainError("grf: correlation_length must lie in [1, min(H, W))");
  }
  if (!(sharpness > 0.0)) throw DomainError("grf: sharpness must be positive");
  const auto pixels = static_cast<Index>(height * width);
  const auto p_count = static_cast<Index>(classes);
  const auto kernel = gaussian_kernel(correlation_length);

  // Row-major H x W fields, one per class.
  Matrix fields(pixels, p_count);
  for (Index p = 0; p < p_count; ++p) {
    Rng rng = make_rng(seed, {stream::kAbundances, static_cast<std::uint64_t>(p)});
    std::normal_distribution<double> gauss;
    double* f = fields.col(p).data();
    for (Index i = 0; i < pixels; ++i) f[i] = gauss(rng);
    std::vector<double> scratch;
    const auto h = static_cast<long>(height);
    const auto w = static_cast<long>(width);
    for (long r = 0; r < h; ++r) blur_line(f + r * w, w, 1, kernel, scratch);
    for (long c = 0; c < w; ++c) blur_line(f + c, h, w, kernel, scratch);
    const double mean = fields.col(p).mean();
    fields.col(p).array() -= mean;
    const double sd = std::sqrt(fields.col(p).squaredNorm() / static_cast<double>(pixels));
    if (sd > 0.0) fields.col(p) /= sd;
  }

  Matrix fractions(p_count, pixels);
  for (Index n = 0; n < pixels; ++n) {
    const auto row = fields.row(n);
    const double peak = row.maxCoeff();
    double total = 0.0;
    for (Index p = 0; p < p_count; ++p) {
      fractions(p, n) = std::exp((row(p) - peak) / sharpness);
      total += fractions(p, n);
    }
    fractions.col(n) /= total;
  }
  inject_pure_pixels(fractions, pure_fraction, seed);
  return AbundanceMap(std::move(fractions), std::move(class_names), true);
}

// ---------------------------------------------------------------- radiative models

Vector hapke_reflectance(const Vector& albedo, double mu1, double mu2) {
  if (!(mu1 > 0.0 && mu1 <= 1.0) || !(mu2 > 0.0 && mu2 <= 1.0)) {
    throw DomainError("hapke_reflectance: mu1, mu2 must lie in (0, 1]");
  }
  Vector y(albedo.size());
  for (Index b = 0; b < albedo.size(); ++b) {
    const double w = albedo(b);
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("hapke_reflectance: albedo outside [0, 1]");
    const double s = std::sqrt(1.0 - w);
    y(b) = w / ((1.0 + 2.0 * mu1 * s) * (1.0 + 2.0 * mu2 * s));
  }
  return y;
}

Vector atmospheric_reflectance(const Vector& ground, double mu1, double mu2,
                               const Vector& e_sun, const Vector& e_sky) {
  if (e_sun.size() != ground.size() || e_sky.size() != ground.size()) {
    throw DimensionError("atmospheric_reflectance: illumination length mismatch");
  }
  if (!(mu1 > 0.0 && mu1 <= 1.0) || !(mu2 > 0.0 && mu2 <= 1.0)) {
    throw DomainError("atmospheric_reflectance: mu1, mu2 must lie in (0, 1]");
  }
  Vector y(ground.size());
  for (Index b = 0; b < ground.size(); ++b) {
    if (e_sun(b) < 0.0 || !(e_sky(b) > 0.0)) {
      throw DomainError("atmospheric_reflectance: need e_sun >= 0 and e_sky > 0");
    }
    const double denom = e_sun(b) * mu2 + e_sky(b);
    if (denom == 0.0) throw DomainError("atmospheric_reflectance: zero denominator");
    y(b) = ground(b) * (e_sun(b) * mu1 + e_sky(b)) / denom;
  }
  return y;
}

Vector atmospheric_reflectance(const Vector& ground, double mu1, double mu2, double e_sun,
                               double e_sky) {
  return atmospheric_reflectance(ground, mu1, mu2, Vector::Constant(ground.size(), e_sun),
                                 Vector::Constant(ground.size(), e_sky));
}

// ---------------------------------------------------------------- variants

Matrix scaling_variants(const Vector& m0, ScalingMode mode, const ClassVariability& params,
                        std::uint64_t seed) {
  if (m0.size() == 0) throw DimensionError("scaling_variants: empty signature");
  if (m0.minCoeff() < 0.0) throw DomainError("scaling_variants: base signature must be >= 0");
  const Range& range = mode == ScalingMode::elmm ? params.psi : params.band_scale;
  if (!(range.lo > 0.0) || !(range.hi > 0.0)) {
    throw DomainError("scaling_variants: scaling range bounds must be positive");
  }
  if (range.lo > range.hi) throw DomainError("scaling_variants: empty scaling range");
  if (params.variants == 0) throw DomainError("scaling_variants: need at least one variant");

  const auto bands = m0.size();
  const auto k_count = static_cast<Index>(params.variants);
  Matrix out(bands, k_count);
  Rng rng = make_rng(seed, {stream::kVariants});
  if (mode == ScalingMode::elmm) {
    for (Index k = 0; k < k_count; ++k) out.col(k) = uniform(rng, range) * m0;
    return out;
  }
  const Range log_range{std::log(range.lo), std::log(range.hi)};
  const auto kernel = gaussian_kernel(params.band_smoothness);
  std::vector<double> scratch;
  for (Index k = 0; k < k_count; ++k) {
    Vector log_scale(bands);
    for (Index b = 0; b < bands; ++b) log_scale(b) = uniform(rng, log_range);
    blur_line(log_scale.data(), static_cast<long>(bands), 1, kernel, scratch);
    out.col(k) = m0.cwiseProduct(log_scale.array().exp().matrix());
  }
  return out;
}

Matrix generate_variants(const Vector& base, const ClassVariability& params, std::uint64_t seed) {
  const auto k_count = static_cast<Index>(params.variants);
  if (k_count == 0) throw DomainError("generate_variants: need at least one variant");
  switch (params.mode) {
    case VariabilityMode::elmm_scaling:
      return scaling_variants(base, ScalingMode::elmm, params, seed);
    case VariabilityMode::glmm_scaling:
      return scaling_variants(base, ScalingMode::glmm, params, seed);
    case VariabilityMode::none:
      return base.replicate(1, k_count);
    case VariabilityMode::hapke: {
      Matrix out(base.size(), k_count);
      Rng rng = make_rng(seed, {stream::kVariants});
      for (Index k = 0; k < k_count; ++k) {
        const double mu1 = uniform(rng, params.mu1);
        const double mu2 = uniform(rng, params.mu2);
        out.col(k) = hapke_reflectance(base, mu1, mu2);
      }
      return out;
    }
    case VariabilityMode::atmospheric: {
      Matrix out(base.size(), k_count);
      Rng rng = make_rng(seed, {stream::kVariants});
      for (Index k = 0; k < k_count; ++k) {
        const double mu1 = uniform(rng, params.mu1);
        out.col(k) = atmospheric_reflectance(base, mu1, params.mu2_fixed, params.e_sun, params.e_sky);
      }
      return out;
    }
  }
  throw ConfigError("generate_variants: unknown mode");
}

// ---------------------------------------------------------------- scenes

SceneTruth synthesize_scene(const SpectralLibrary& base_library, const SceneConfig& config) {
  const std::size_t p_count = base_library.classes();
  for (const auto& b : base_library.bundles()) {
    if (b.signatures.cols() != 1) {
      throw ConfigError("synthesize_scene: base library must hold one signature per class");
    }
  }
  config.variability.validate(p_count);
  config.abundances.validate(p_count);
  const std::uint64_t seed = config.seed;
  const auto names = base_library.class_names();

  // (1) variants per class
  std::vector<SpectralBundle> variant_bundles;
  const std::uint64_t var_seed = derive_seed(seed, {stream::kVariants, config.variability.seed});
  for (std::size_t p = 0; p < p_count; ++p) {
    Matrix v = generate_variants(base_library.bundle(p).signatures.col(0),
                                 config.variability.classes[p], derive_seed(var_seed, {p}));
    variant_bundles.push_back({names[p], std::move(v)});
  }
  SpectralLibrary variants(std::move(variant_bundles));

  // (2) per-pixel variant draw from a counter-based substream
  const auto& ac = config.abundances;
  const std::size_t pixels = ac.height * ac.width;
  const std::uint64_t draw_seed = derive_seed(seed, {stream::kPixelDraw});
  Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> variant_index(
      static_cast<Index>(p_count), static_cast<Index>(pixels));
  std::vector<Matrix> per_pixel(pixels);
  parallel_for(pixels, [&](std::size_t n) {
    Matrix m(static_cast<Index>(base_library.bands()), static_cast<Index>(p_count));
    for (std::size_t p = 0; p < p_count; ++p) {
      const auto& bundle = variants.bundle(p).signatures;
      const auto k = hashed_index(draw_seed, {n, p}, static_cast<std::uint64_t>(bundle.cols()));
      variant_index(static_cast<Index>(p), static_cast<Index>(n)) = static_cast<std::size_t>(k);
      m.col(static_cast<Index>(p)) = bundle.col(static_cast<Index>(k));
    }
    per_pixel[n] = std::move(m);
  });
  EndmemberField field(std::move(per_pixel));

  // (3) abundances
  const std::uint64_t ab_seed = derive_seed(seed, {stream::kAbundances, ac.seed});
  AbundanceMap abundances = [&] {
    if (ac.generator == AbundanceGenerator::dirichlet) {
      std::vector<double> alpha = ac.alpha.empty() ? std::vector<double>(p_count, 1.0) : ac.alpha;
      return sample_abundances_dirichlet(pixels, alpha, ac.pure_fraction, ab_seed, names);
    }
    return sample_abundances_grf(ac.height, ac.width, p_count, ac.correlation_length,
                                 ac.sharpness, ac.pure_fraction, ab_seed, names);
  }();

  // (4) clean image, (5) noise
  SpectralImage clean = mix_forward(field, abundances, ac.height, ac.width, "clean");
  const SpectralImage noised = add_noise(clean, config.snr_db, derive_seed(seed, {stream::kNoise}));
  SpectralImage noisy("noisy", ac.height, ac.width, noised.data());
  return SceneTruth{std::move(noisy), std::move(clean), std::move(abundances), std::move(field),
                    config.snr_db, seed, std::move(variants), std::move(variant_index)};
}

std::vector<double> reference_wavelengths(std::size_t bands) {
  std::vector<double> wl(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    wl[b] = bands == 1 ? 400.0 : 400.0 + 2100.0 * static_cast<double>(b) / static_cast<double>(bands - 1);
  }
  return wl;
}

SpectralLibrary reference_base_library(std::size_t bands) {
  if (bands == 0) throw DomainError("reference_base_library: zero bands");
  const auto wl = reference_wavelengths(bands);
  auto bump = [](double x, double centre, double width) {
    const double t = (x - centre) / width;
    return std::exp(-t * t);
  };
  Matrix m(static_cast<Index>(bands), 3);
  for (std::size_t b = 0; b < bands; ++b) {
    const double x = wl[b];
    // Vegetation reflectance: green peak, red edge, NIR plateau, leaf water bands.
    double veg = 0.03 + 0.06 * bump(x, 550.0, 40.0) + 0.42 / (1.0 + std::exp(-(x - 720.0) / 15.0));
    veg *= 1.0 - 0.45 * std::max(0.0, (x - 1100.0) / 1400.0);
    veg -= 0.12 * bump(x, 1450.0, 60.0) + 0.16 * bump(x, 1940.0, 80.0);
    // Soil single-scattering albedo: rising continuum with hydroxyl/clay features.
    double soil = 0.40 + 0.40 * (x - 400.0) / 2100.0 - 0.08 * bump(x, 1400.0, 50.0) -
                  0.10 * bump(x, 1900.0, 60.0) - 0.06 * bump(x, 2200.0, 40.0);
    // Water reflectance: blue maximum, near zero beyond the NIR.
    const double water = 0.004 + 0.07 * bump(x, 480.0, 110.0) + 0.02 * std::exp(-(x - 400.0) / 300.0);
    const auto r = static_cast<Index>(b);
    m(r, 0) = std::max(veg, 0.01);
    m(r, 1) = std::clamp(soil, 0.05, 0.95);
    m(r, 2) = water;
  }
  return SpectralLibrary::from_matrix(m, {"vegetation", "soil", "water"});
}

}  // namespace varimix
