#include "varimix/types.hpp"

#include <cmath>
#include <utility>

#include "varimix/errors.hpp"

namespace varimix {
namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_nonnegative(const Matrix& m, const char* what) {
  if (m.size() > 0 && m.minCoeff() < 0.0) {
    throw DomainError(std::string(what) + ": reflectance values must be nonnegative");
  }
}

}  // namespace

std::vector<std::string> default_class_names(std::size_t count, const std::string& prefix) {
  std::vector<std::string> names;
  names.reserve(count);
  for (std::size_t p = 0; p < count; ++p) names.push_back(prefix + std::to_string(p));
  return names;
}

// ---------------------------------------------------------------- image

SpectralImage::SpectralImage(std::string name, std::size_t height, std::size_t width,
                             Matrix data, std::vector<double> wavelengths)
    : name_(std::move(name)),
      height_(height),
      width_(width),
      data_(std::move(data)),
      wavelengths_(std::move(wavelengths)) {
  if (height_ == 0 || width_ == 0 || data_.rows() == 0) {
    throw DimensionError("SpectralImage: height, width and band count must be positive");
  }
  if (static_cast<std::size_t>(data_.cols()) != height_ * width_) {
    throw DimensionError("SpectralImage: data has " + std::to_string(data_.cols()) +
                         " pixels, expected " + std::to_string(height_ * width_));
  }
  if (!wavelengths_.empty() && wavelengths_.size() != bands()) {
    throw DimensionError("SpectralImage: wavelength count differs from band count");
  }
  if (!all_finite(data_)) throw DomainError("SpectralImage: non-finite value");
}

std::size_t SpectralImage::suspicious_count() const {
  return static_cast<std::size_t>(((data_.array() < -0.1) || (data_.array() > 2.0)).count());
}

SpectralImage SpectralImage::with_data(Matrix data, std::string name) const {
  std::vector<double> wl;
  if (static_cast<std::size_t>(data.rows()) == bands()) wl = wavelengths_;
  return SpectralImage(name.empty() ? name_ : std::move(name), height_, width_, std::move(data),
                       std::move(wl));
}

// ---------------------------------------------------------------- library

SpectralLibrary::SpectralLibrary(std::vector<SpectralBundle> bundles, SignalDomain domain)
    : bundles_(std::move(bundles)), domain_(domain) {
  if (bundles_.empty()) throw EmptyClassError("SpectralLibrary: no classes");
  bands_ = static_cast<std::size_t>(bundles_.front().signatures.rows());
  if (bands_ == 0) throw DimensionError("SpectralLibrary: zero bands");
  for (const auto& b : bundles_) {
    if (b.signatures.cols() == 0) {
      throw EmptyClassError("SpectralLibrary: class '" + b.name + "' has no signatures");
    }
    if (static_cast<std::size_t>(b.signatures.rows()) != bands_) {
      throw DimensionError("SpectralLibrary: class '" + b.name + "' has inconsistent band count");
    }
    if (!all_finite(b.signatures)) {
      throw DomainError("SpectralLibrary: non-finite value in class '" + b.name + "'");
    }
    if (domain_ == SignalDomain::reflectance) require_nonnegative(b.signatures, "SpectralLibrary");
  }
}

SpectralLibrary SpectralLibrary::from_matrix(const Matrix& endmembers,
                                             std::vector<std::string> class_names,
                                             SignalDomain domain) {
  const auto p_count = static_cast<std::size_t>(endmembers.cols());
  if (class_names.empty()) class_names = default_class_names(p_count);
  if (class_names.size() != p_count) {
    throw DimensionError("SpectralLibrary::from_matrix: class name count mismatch");
  }
  std::vector<SpectralBundle> bundles;
  bundles.reserve(p_count);
  for (std::size_t p = 0; p < p_count; ++p) {
    bundles.push_back({class_names[p], endmembers.col(static_cast<Eigen::Index>(p))});
  }
  return SpectralLibrary(std::move(bundles), domain);
}

std::vector<std::string> SpectralLibrary::class_names() const {
  std::vector<std::string> names;
  names.reserve(bundles_.size());
  for (const auto& b : bundles_) names.push_back(b.name);
  return names;
}

std::size_t SpectralLibrary::total_signatures() const {
  std::size_t total = 0;
  for (const auto& b : bundles_) total += static_cast<std::size_t>(b.signatures.cols());
  return total;
}

std::uint64_t SpectralLibrary::model_count() const {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t count = 1;
  for (const auto& b : bundles_) {
    const auto m = static_cast<std::uint64_t>(b.signatures.cols());
    if (count > kMax / m) return kMax;
    count *= m;
  }
  return count;
}

FlatLibrary SpectralLibrary::flatten() const {
  FlatLibrary flat;
  flat.columns.resize(static_cast<Eigen::Index>(bands_),
                      static_cast<Eigen::Index>(total_signatures()));
  flat.offsets.push_back(0);
  Eigen::Index col = 0;
  for (std::size_t p = 0; p < bundles_.size(); ++p) {
    const auto& s = bundles_[p].signatures;
    flat.columns.middleCols(col, s.cols()) = s;
    for (Eigen::Index j = 0; j < s.cols(); ++j) flat.class_of.push_back(p);
    col += s.cols();
    flat.offsets.push_back(static_cast<std::size_t>(col));
    flat.class_names.push_back(bundles_[p].name);
  }
  return flat;
}

Matrix SpectralLibrary::class_means() const {
  Matrix means(static_cast<Eigen::Index>(bands_), static_cast<Eigen::Index>(bundles_.size()));
  for (std::size_t p = 0; p < bundles_.size(); ++p) {
    means.col(static_cast<Eigen::Index>(p)) = bundles_[p].signatures.rowwise().mean();
  }
  return means;
}

// ---------------------------------------------------------------- abundances

AbundanceMap::AbundanceMap(Matrix fractions, std::vector<std::string> class_names,
                           bool sum_to_one)
    : fractions_(std::move(fractions)),
      class_names_(std::move(class_names)),
      sum_to_one_(sum_to_one) {
  if (fractions_.rows() == 0 || fractions_.cols() == 0) {
    throw DimensionError("AbundanceMap: empty");
  }
  if (class_names_.empty()) class_names_ = default_class_names(classes());
  if (class_names_.size() != classes()) {
    throw DimensionError("AbundanceMap: class name count mismatch");
  }
  if (!fractions_.allFinite()) throw DomainError("AbundanceMap: non-finite value");
  for (Eigen::Index n = 0; n < fractions_.cols(); ++n) {
    auto a = fractions_.col(n);
    for (Eigen::Index p = 0; p < a.size(); ++p) {
      if (a(p) < -1e-9) {
        throw DomainError("AbundanceMap: negative fraction " + std::to_string(a(p)) +
                          " at pixel " + std::to_string(n));
      }
      if (a(p) < 0.0) a(p) = 0.0;
    }
    if (sum_to_one_) {
      const double s = a.sum();
      if (std::abs(s - 1.0) > 1e-6) {
        throw DomainError("AbundanceMap: row " + std::to_string(n) + " sums to " +
                          std::to_string(s));
      }
      // Leave rows already summing to one within rounding untouched so that
      // save/load round trips stay bit-exact.
      if (std::abs(s - 1.0) > 1e-14 * static_cast<double>(a.size())) a /= s;
    }
  }
}

AbundanceMap AbundanceMap::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != classes()) throw DimensionError("AbundanceMap::permuted: bad order");
  Matrix out(fractions_.rows(), fractions_.cols());
  std::vector<std::string> names(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    out.row(static_cast<Eigen::Index>(p)) = fractions_.row(static_cast<Eigen::Index>(order[p]));
    names[p] = class_names_.at(order[p]);
  }
  // Already validated; permutation preserves row sums.
  return AbundanceMap(std::move(out), std::move(names), sum_to_one_);
}

// ---------------------------------------------------------------- endmember field

EndmemberField::EndmemberField(std::vector<Matrix> per_pixel, SignalDomain domain)
    : per_pixel_(std::move(per_pixel)), domain_(domain) {
  if (per_pixel_.empty()) throw DimensionError("EndmemberField: no pixels");
  bands_ = static_cast<std::size_t>(per_pixel_.front().rows());
  classes_ = static_cast<std::size_t>(per_pixel_.front().cols());
  if (bands_ == 0 || classes_ == 0) throw DimensionError("EndmemberField: empty matrices");
  for (const auto& m : per_pixel_) {
    if (static_cast<std::size_t>(m.rows()) != bands_ ||
        static_cast<std::size_t>(m.cols()) != classes_) {
      throw DimensionError("EndmemberField: inconsistent per-pixel matrix shape");
    }
    if (!m.allFinite()) throw DomainError("EndmemberField: non-finite value");
    if (domain_ == SignalDomain::reflectance) require_nonnegative(m, "EndmemberField");
  }
}

EndmemberField EndmemberField::uniform(const Matrix& endmembers, std::size_t pixels) {
  return EndmemberField(std::vector<Matrix>(pixels, endmembers));
}

EndmemberField EndmemberField::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != classes_) throw DimensionError("EndmemberField::permuted: bad order");
  std::vector<Matrix> out;
  out.reserve(per_pixel_.size());
  for (const auto& m : per_pixel_) {
    Matrix r(m.rows(), m.cols());
    for (std::size_t p = 0; p < order.size(); ++p) {
      r.col(static_cast<Eigen::Index>(p)) = m.col(static_cast<Eigen::Index>(order[p]));
    }
    out.push_back(std::move(r));
  }
  return EndmemberField(std::move(out), domain_);
}

Matrix EndmemberField::mean() const {
  Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(bands_), static_cast<Eigen::Index>(classes_));
  for (const auto& m : per_pixel_) acc += m;
  return acc / static_cast<double>(per_pixel_.size());
}

}  // namespace varimix
