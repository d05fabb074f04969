#pragma once

// Small deterministic scenes and libraries shared by the unit and
// acceptance tests.

#include <cmath>
#include <random>

#include "varimix/synthesis.hpp"
#include "varimix/types.hpp"

namespace fixture {

using namespace varimix;

inline SceneConfig scene_config(std::size_t height, std::size_t width, VariabilityMode mode,
                                std::size_t variants, double snr_db, std::uint64_t seed) {
  SceneConfig c;
  c.abundances.generator = AbundanceGenerator::dirichlet;
  c.abundances.height = height;
  c.abundances.width = width;
  c.variability.classes.assign(3, ClassVariability{});
  for (auto& k : c.variability.classes) {
    k.mode = mode;
    k.variants = variants;
  }
  c.snr_db = snr_db;
  c.seed = seed;
  return c;
}

// Noiseless, no variability, Dirichlet abundances with a share of pure pixels.
inline SceneTruth pure_pixel_scene(std::size_t bands, std::uint64_t seed) {
  SceneConfig c = scene_config(20, 20, VariabilityMode::none, 1, kNoiseless, seed);
  c.abundances.pure_fraction = 0.1;
  return synthesize_scene(reference_base_library(bands), c);
}

// Three well separated groups of signatures, each a small multiplicative
// and additive perturbation of one prototype.
inline Matrix clustered_signatures(std::size_t per_cluster, std::uint64_t seed,
                                   std::vector<std::size_t>* labels = nullptr) {
  const Matrix proto = reference_base_library(60).class_means();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.9, 1.1);
  std::normal_distribution<double> noise(0.0, 0.002);
  Matrix out(proto.rows(), static_cast<Eigen::Index>(3 * per_cluster));
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < per_cluster; ++i) {
    for (Eigen::Index p = 0; p < 3; ++p) {
      Vector v = proto.col(p) * scale(rng);
      for (auto& x : v) x = std::max(0.0, x + noise(rng));
      out.col(col++) = v;
      if (labels) labels->push_back(static_cast<std::size_t>(p));
    }
  }
  return out;
}

// One class whose signatures form two angular clusters (~0.4 rad apart);
// members lie within ~0.005 rad of their cluster centre.
inline SpectralLibrary two_cluster_library(std::uint64_t seed) {
  const Matrix proto = reference_base_library(50).class_means();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.0005);
  std::uniform_real_distribution<double> scale(0.8, 1.2);
  Matrix sigs(50, 12);
  for (Eigen::Index j = 0; j < 12; ++j) {
    Vector v = proto.col(j < 6 ? 0 : 1) * scale(rng);
    for (auto& x : v) x = std::max(0.0, x + noise(rng));
    sigs.col(j) = v;
  }
  return SpectralLibrary({{"mixed", sigs}});
}

}  // namespace fixture
