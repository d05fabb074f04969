#include "varimix/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "varimix/errors.hpp"
#include "varimix/parallel.hpp"
#include "varimix/random.hpp"

namespace varimix {
namespace {

using Index = Eigen::Index;

// Eigenvectors of a symmetric matrix, sorted by decreasing eigenvalue.
Matrix leading_eigenvectors(const Matrix& sym, Index count, Vector* values = nullptr) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Index n = sym.rows();
  Matrix vecs(n, count);
  if (values) values->resize(count);
  for (Index i = 0; i < count; ++i) {
    vecs.col(i) = eig.eigenvectors().col(n - 1 - i);
    if (values) (*values)(i) = eig.eigenvalues()(n - 1 - i);
  }
  return vecs;
}

Index argmax_abs(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  Index best = 0;
  double best_value = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best_value) {
      best_value = std::abs(v(i));
      best = i;
    }
  }
  return best;
}

double distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& c,
                ClusterMetric metric) {
  if (metric == ClusterMetric::euclidean) return (x - c).squaredNorm();
  return 1.0 - x.dot(c);  // both unit-norm
}

}  // namespace

EndmemberExtraction extract_endmembers(const Matrix& y, std::size_t classes, std::uint64_t seed) {
  const Index bands = y.rows();
  const Index n = y.cols();
  const auto p = static_cast<Index>(classes);
  if (p == 0) throw DomainError("extract_endmembers: need at least one class");
  if (n < p) {
    throw DimensionError("extract_endmembers: " + std::to_string(n) + " pixels for " +
                         std::to_string(p) + " classes");
  }
  if (!y.allFinite()) throw DomainError("extract_endmembers: non-finite pixel value");

  EndmemberExtraction out;
  const Vector mean = y.rowwise().mean();
  const Matrix centered = y.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(n);

  // Rank of the centered data decides whether a (P-1)-simplex exists.
  Eigen::SelfAdjointEigenSolver<Matrix> cov_eig(cov, Eigen::EigenvaluesOnly);
  const double top = std::max(cov_eig.eigenvalues().maxCoeff(), 0.0);
  const double floor = 1e-12 * std::max(top, mean.squaredNorm());
  const auto rank = static_cast<Index>((cov_eig.eigenvalues().array() > floor).count());
  if (rank < p - 1) {
    out.degenerate = true;
    out.warnings.push_back("degenerate geometry: data rank " + std::to_string(rank) +
                           " below P - 1 = " + std::to_string(p - 1));
  }
  if (rank == 0) {
    out.signatures = y.col(0).replicate(1, p);
    out.pixel_indices.assign(classes, 0);
    return out;
  }
  if (p == 1) {
    // Pixel with maximal |projection| on the first principal direction.
    const Vector u = leading_eigenvectors(cov, 1).col(0);
    const Index best = argmax_abs(u.transpose() * centered);
    out.signatures = y.col(best);
    out.pixel_indices = {static_cast<std::size_t>(best)};
    return out;
  }

  // SNR estimate from the P-dimensional centered projection.
  const Matrix ud_centered = leading_eigenvectors(cov, std::min(p, bands));
  const Matrix x_p = ud_centered.transpose() * centered;
  const double power_y = y.squaredNorm() / static_cast<double>(n);
  const double power_x = x_p.squaredNorm() / static_cast<double>(n) + mean.squaredNorm();
  const double ratio = (power_x - static_cast<double>(p) / static_cast<double>(bands) * power_y) /
                       (power_y - power_x);
  const double snr = ratio > 0.0 ? 10.0 * std::log10(ratio) : -std::numeric_limits<double>::infinity();
  const double snr_threshold = 15.0 + 10.0 * std::log10(static_cast<double>(p));
  const bool high_snr = std::isnan(snr) || power_y - power_x <= 0.0 || snr >= snr_threshold;

  Matrix projected;  // p x n
  if (!high_snr || p > bands) {
    const Index d = p - 1;
    Matrix x = x_p.topRows(std::min(d, x_p.rows()));
    const double c = x.colwise().norm().maxCoeff();
    projected.resize(p, n);
    projected.setZero();
    projected.topRows(x.rows()) = x;
    projected.row(p - 1).setConstant(c > 0.0 ? c : 1.0);
  } else {
    const Matrix ud = leading_eigenvectors(y * y.transpose() / static_cast<double>(n), p);
    const Matrix x = ud.transpose() * y;
    const Vector u = x.rowwise().mean();
    const Eigen::RowVectorXd scale = u.transpose() * x;
    projected = x;
    for (Index i = 0; i < n; ++i) {
      if (scale(i) != 0.0) projected.col(i) /= scale(i);
    }
  }

  Rng rng = make_rng(seed, {stream::kExtraction});
  std::normal_distribution<double> gauss;
  Matrix a = Matrix::Zero(p, p);
  a(p - 1, 0) = 1.0;
  out.pixel_indices.resize(classes);
  for (Index i = 0; i < p; ++i) {
    Vector w(p);
    for (Index k = 0; k < p; ++k) w(k) = gauss(rng);
    const Vector f_raw = w - a * a.completeOrthogonalDecomposition().solve(w);
    const double f_norm = f_raw.norm();
    const Vector f = f_norm > 0.0 ? Vector(f_raw / f_norm) : w.normalized();
    const Index best = argmax_abs(f.transpose() * projected);
    a.col(i) = projected.col(best);
    out.pixel_indices[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  out.signatures.resize(bands, p);
  for (Index i = 0; i < p; ++i) {
    out.signatures.col(i) = y.col(static_cast<Index>(out.pixel_indices[static_cast<std::size_t>(i)]));
  }
  return out;
}

EndmemberExtraction extract_endmembers(const SpectralImage& image, std::size_t classes,
                                       std::uint64_t seed) {
  return extract_endmembers(image.data(), classes, seed);
}

ClusterMetric parse_cluster_metric(const std::string& text) {
  if (text == "spectral_angle" || text == "sam") return ClusterMetric::spectral_angle;
  if (text == "euclidean") return ClusterMetric::euclidean;
  throw ConfigError("unknown cluster metric '" + text + "'");
}

ClusterResult cluster_signatures(const Matrix& signatures, std::size_t classes,
                                 ClusterMetric metric, std::uint64_t seed, std::size_t restarts) {
  const Index n = signatures.cols();
  const auto k = static_cast<Index>(classes);
  if (k == 0) throw DomainError("cluster_signatures: need at least one cluster");
  if (n < k) {
    throw DimensionError("cluster_signatures: " + std::to_string(classes) + " clusters for " +
                         std::to_string(n) + " signatures");
  }
  Matrix data = signatures;
  if (metric == ClusterMetric::spectral_angle) {
    for (Index i = 0; i < n; ++i) {
      const double norm = data.col(i).norm();
      if (norm == 0.0) throw DegenerateError("cluster_signatures: zero-norm signature");
      data.col(i) /= norm;
    }
  }

  auto assign = [&](const Matrix& centroids, std::vector<std::size_t>& labels) {
    double cost = 0.0;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c) {
        const double d = distance(data.col(i), centroids.col(c), metric);
        if (d < best_d) {  // equidistant: lowest centroid index keeps it
          best_d = d;
          best = c;
        }
      }
      labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
      cost += std::max(best_d, 0.0);
    }
    return cost;
  };

  ClusterResult best;
  best.cost = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    Rng rng = make_rng(seed, {stream::kClustering, r});
    // k-means++ seeding
    Matrix centroids(data.rows(), k);
    std::uniform_int_distribution<Index> first(0, n - 1);
    centroids.col(0) = data.col(first(rng));
    Vector d2(n);
    for (Index c = 1; c < k; ++c) {
      for (Index i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < c; ++j) m = std::min(m, std::max(distance(data.col(i), centroids.col(j), metric), 0.0));
        d2(i) = m;
      }
      const double total = d2.sum();
      Index pick = 0;
      if (total > 0.0) {
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        for (pick = 0; pick < n - 1; ++pick) {
          target -= d2(pick);
          if (target < 0.0) break;
        }
      } else {
        pick = first(rng);
      }
      centroids.col(c) = data.col(pick);
    }

    std::vector<std::size_t> labels(static_cast<std::size_t>(n), 0);
    std::vector<std::size_t> previous;
    double cost = 0.0;
    bool empty_cluster = false;
    for (int iter = 0; iter < 300; ++iter) {
      cost = assign(centroids, labels);
      if (labels == previous) break;
      previous = labels;
      Matrix sums = Matrix::Zero(data.rows(), k);
      std::vector<std::size_t> counts(classes, 0);
      for (Index i = 0; i < n; ++i) {
        sums.col(static_cast<Index>(labels[static_cast<std::size_t>(i)])) += data.col(i);
        ++counts[labels[static_cast<std::size_t>(i)]];
      }
      empty_cluster = std::find(counts.begin(), counts.end(), 0u) != counts.end();
      if (empty_cluster) break;
      for (Index c = 0; c < k; ++c) {
        Vector centre = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        if (metric == ClusterMetric::spectral_angle) {
          const double norm = centre.norm();
          if (norm > 0.0) centre /= norm;
        }
        centroids.col(c) = centre;
      }
    }
    if (empty_cluster) continue;
    if (cost < best.cost) {
      best.cost = cost;
      best.assignment = labels;
      best.centroids = centroids;
      found = true;
    }
  }
  if (!found) throw EmptyClassError("cluster_signatures: every restart left an empty cluster");
  return best;
}

void BundleExtractionConfig::validate(std::size_t pixels) const {
  if (classes == 0) throw ConfigError("bundle extraction: classes must be >= 1");
  if (num_runs == 0) throw ConfigError("bundle extraction: num_runs must be >= 1");
  if (subset_size < classes) throw ConfigError("bundle extraction: subset_size below class count");
  if (!with_replacement && subset_size > pixels) {
    throw ConfigError("bundle extraction: subset_size exceeds pixel count without replacement");
  }
}

SpectralLibrary extract_bundles(const SpectralImage& image, const BundleExtractionConfig& config) {
  const std::size_t n = image.pixels();
  config.validate(n);
  const auto p = config.classes;

  // Independent subset runs, each writing its own slot.
  std::vector<Matrix> run_signatures(config.num_runs);
  parallel_for(config.num_runs, [&](std::size_t r) {
    Rng rng = make_rng(config.seed, {stream::kExtraction, r});
    std::vector<std::size_t> subset(config.subset_size);
    if (config.with_replacement) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& s : subset) s = pick(rng);
    } else {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < config.subset_size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        subset[i] = idx[i];
      }
    }
    Matrix y(static_cast<Index>(image.bands()), static_cast<Index>(subset.size()));
    for (std::size_t i = 0; i < subset.size(); ++i) {
      y.col(static_cast<Index>(i)) = image.pixel(subset[i]);
    }
    run_signatures[r] = extract_endmembers(y, p, derive_seed(config.seed, {stream::kExtraction, r, 1})).signatures;
  });

  Matrix pooled(static_cast<Index>(image.bands()), static_cast<Index>(config.num_runs * p));
  for (std::size_t r = 0; r < config.num_runs; ++r) {
    pooled.middleCols(static_cast<Index>(r * p), static_cast<Index>(p)) = run_signatures[r];
  }

  ClusterResult clusters;
  bool ok = false;
  for (std::uint64_t attempt = 0; attempt < 10 && !ok; ++attempt) {
    try {
      clusters = cluster_signatures(pooled, p, config.cluster_metric,
                                    derive_seed(config.seed, {stream::kClustering, attempt}));
      ok = true;
    } catch (const EmptyClassError&) {
    }
  }
  if (!ok) throw EmptyClassError("extract_bundles: clustering left an empty class after 10 attempts");

  std::vector<std::vector<Index>> members(p);
  for (Index i = 0; i < pooled.cols(); ++i) members[clusters.assignment[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<double> mean_norm(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    for (const Index i : members[c]) mean_norm[c] += pooled.col(i).norm();
    mean_norm[c] /= static_cast<double>(members[c].size());
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mean_norm[a] > mean_norm[b]; });

  std::vector<SpectralBundle> bundles;
  for (std::size_t rank = 0; rank < p; ++rank) {
    const auto& idx = members[order[rank]];
    Matrix sigs(pooled.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) sigs.col(static_cast<Index>(j)) = pooled.col(idx[j]);
    bundles.push_back({"em" + std::to_string(rank), std::move(sigs)});
  }
  // Noise can push dark bands of a selected pixel below zero; the library
  // holds reflectances, so those entries are clipped.
  for (auto& b : bundles) b.signatures = b.signatures.cwiseMax(0.0);
  return SpectralLibrary(std::move(bundles));
}

}  // namespace varimix
