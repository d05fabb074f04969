#pragma once

// Core value types shared by every varimix module. All of them validate on
// construction and are immutable afterwards.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace varimix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Whether values are physical reflectances (nonnegative) or the output of a
/// spectral transform such as FDA, which may be negative.
enum class SignalDomain { reflectance, transformed };

/// An H x W image with L bands. Stored as an L x N matrix whose column n is
/// pixel y_n (row-major pixel order), i.e. band-interleaved-by-pixel memory.
class SpectralImage {
 public:
  SpectralImage(std::string name, std::size_t height, std::size_t width, Matrix data,
                std::vector<double> wavelengths = {});

  const std::string& name() const noexcept { return name_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  const Matrix& data() const noexcept { return data_; }
  auto pixel(std::size_t n) const { return data_.col(static_cast<Eigen::Index>(n)); }
  const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }

  /// Count of entries outside [-0.1, 2.0]; such values are legal but suspicious.
  std::size_t suspicious_count() const;

  /// Same geometry and metadata, new band data (band count may change).
  SpectralImage with_data(Matrix data, std::string name = {}) const;

 private:
  std::string name_;
  std::size_t height_;
  std::size_t width_;
  Matrix data_;
  std::vector<double> wavelengths_;
};

/// One material class: an L x M_p matrix of candidate signatures.
struct SpectralBundle {
  std::string name;
  Matrix signatures;
};

/// All library signatures concatenated column-wise with a class side table.
struct FlatLibrary {
  Matrix columns;                       // L x sum(M_p)
  std::vector<std::size_t> class_of;    // class index of each column
  std::vector<std::size_t> offsets;     // first column of each class, size P + 1
  std::vector<std::string> class_names;
};

class SpectralLibrary {
 public:
  explicit SpectralLibrary(std::vector<SpectralBundle> bundles,
                           SignalDomain domain = SignalDomain::reflectance);

  /// One signature per class, taken from the columns of an L x P matrix.
  static SpectralLibrary from_matrix(const Matrix& endmembers,
                                     std::vector<std::string> class_names = {},
                                     SignalDomain domain = SignalDomain::reflectance);

  std::size_t bands() const noexcept { return bands_; }
  std::size_t classes() const noexcept { return bundles_.size(); }
  const SpectralBundle& bundle(std::size_t p) const { return bundles_.at(p); }
  const std::vector<SpectralBundle>& bundles() const noexcept { return bundles_; }
  std::vector<std::string> class_names() const;
  std::size_t total_signatures() const;
  /// Product of bundle sizes, saturating at uint64 max.
  std::uint64_t model_count() const;
  SignalDomain domain() const noexcept { return domain_; }

  FlatLibrary flatten() const;
  /// L x P matrix of per-class mean signatures.
  Matrix class_means() const;

 private:
  std::vector<SpectralBundle> bundles_;
  std::size_t bands_ = 0;
  SignalDomain domain_;
};

/// Abundance fractions, stored P x N (column n is a_n).
class AbundanceMap {
 public:
  /// Entries in [-1e-9, 0) are clamped to zero; with sum_to_one set, rows
  /// whose sum is within 1e-6 of one are renormalized and anything farther
  /// throws DomainError.
  AbundanceMap(Matrix fractions, std::vector<std::string> class_names, bool sum_to_one);

  std::size_t classes() const noexcept { return static_cast<std::size_t>(fractions_.rows()); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(fractions_.cols()); }
  const Matrix& fractions() const noexcept { return fractions_; }
  auto pixel(std::size_t n) const { return fractions_.col(static_cast<Eigen::Index>(n)); }
  bool sum_to_one() const noexcept { return sum_to_one_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  /// Reorder classes: row p of the result is row order[p] of this map.
  AbundanceMap permuted(const std::vector<std::size_t>& order) const;

 private:
  Matrix fractions_;
  std::vector<std::string> class_names_;
  bool sum_to_one_;
};

/// Per-pixel L x P endmember matrices M_n.
class EndmemberField {
 public:
  explicit EndmemberField(std::vector<Matrix> per_pixel,
                          SignalDomain domain = SignalDomain::reflectance);
  static EndmemberField uniform(const Matrix& endmembers, std::size_t pixels);

  std::size_t pixels() const noexcept { return per_pixel_.size(); }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t classes() const noexcept { return classes_; }
  const Matrix& at(std::size_t n) const { return per_pixel_.at(n); }
  const std::vector<Matrix>& matrices() const noexcept { return per_pixel_; }
  SignalDomain domain() const noexcept { return domain_; }

  EndmemberField permuted(const std::vector<std::size_t>& order) const;
  /// L x P mean over pixels.
  Matrix mean() const;

 private:
  std::vector<Matrix> per_pixel_;
  std::size_t bands_ = 0;
  std::size_t classes_ = 0;
  SignalDomain domain_;
};

/// Marker for a noiseless scene.
inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// Everything known about a synthetic scene.
struct SceneTruth {
  SpectralImage image_noisy;
  SpectralImage image_clean;
  AbundanceMap abundances;
  EndmemberField endmembers;
  double snr_db;
  std::uint64_t seed;
  /// The K generated variants per class the pixels were drawn from.
  SpectralLibrary variants;
  /// Per-pixel variant index, P x N.
  Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> variant_index;
};

std::vector<std::string> default_class_names(std::size_t count, const std::string& prefix = "class");

}  // namespace varimix
