#pragma once

// Image-based endmember and bundle extraction.

#include <cstdint>
#include <string>
#include <vector>

#include "varimix/types.hpp"

namespace varimix {

struct EndmemberExtraction {
  Matrix signatures;                       // L x P, copies of image pixels
  std::vector<std::size_t> pixel_indices;  // column indices into the input
  bool degenerate = false;                 // data rank below P - 1
  std::vector<std::string> warnings;
};

/// Vertex-component-style pure-pixel extraction. The data are projected onto
/// a P- (high SNR, projective) or (P-1)-dimensional (low SNR, affine)
/// subspace; then P times, a seeded random direction orthogonal to the span of
/// the pixels selected so far is drawn and the pixel with the largest
/// absolute projection onto it is selected.
EndmemberExtraction extract_endmembers(const Matrix& pixels, std::size_t classes,
                                       std::uint64_t seed);
EndmemberExtraction extract_endmembers(const SpectralImage& image, std::size_t classes,
                                       std::uint64_t seed);

enum class ClusterMetric { spectral_angle, euclidean };

ClusterMetric parse_cluster_metric(const std::string& text);

struct ClusterResult {
  std::vector<std::size_t> assignment;  // cluster of each signature
  Matrix centroids;                     // L x P
  double cost = 0.0;                    // sum of point-to-centroid distances
};

/// k-means with k-means++ seeding and `restarts` restarts; the lowest-cost
/// restart without empty clusters wins. With the spectral_angle metric,
/// signatures are unit-normalized and the distance is 1 - cos.
/// Throws EmptyClassError when every restart leaves a cluster empty.
ClusterResult cluster_signatures(const Matrix& signatures, std::size_t classes,
                                 ClusterMetric metric, std::uint64_t seed,
                                 std::size_t restarts = 20);

struct BundleExtractionConfig {
  std::size_t classes = 3;
  std::size_t num_runs = 5;
  std::size_t subset_size = 500;
  bool with_replacement = true;
  ClusterMetric cluster_metric = ClusterMetric::spectral_angle;
  std::uint64_t seed = 0;

  void validate(std::size_t pixels) const;
};

/// Runs extract_endmembers on num_runs random pixel subsets, pools the
/// num_runs * P signatures and clusters them into P bundles. Bundles are named
/// em0, em1, ... in order of decreasing mean signature norm.
SpectralLibrary extract_bundles(const SpectralImage& image, const BundleExtractionConfig& config);

}  // namespace varimix
