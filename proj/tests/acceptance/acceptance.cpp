// Acceptance suite: one PASS/FAIL line per criterion.
//   varimix_acceptance [path-to-varimix-cli]
// Without the CLI path the determinism criterion is reported as FAIL.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "varimix/bench.hpp"
#include "varimix/extraction.hpp"
#include "varimix/library_ops.hpp"
#include "varimix/metrics.hpp"
#include "varimix/mixing.hpp"
#include "varimix/synthesis.hpp"
#include "varimix/unmixers.hpp"

using namespace varimix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

Vector random_simplex(std::mt19937_64& rng, Eigen::Index p) {
  std::exponential_distribution<double> e(1.0);
  Vector a(p);
  for (auto& x : a) x = e(rng);
  return a / a.sum();
}

SceneConfig mixed_modes(SceneConfig c) {
  const std::array<VariabilityMode, 3> modes{VariabilityMode::atmospheric, VariabilityMode::hapke,
                                             VariabilityMode::elmm_scaling};
  for (std::size_t p = 0; p < 3; ++p) c.variability.classes[p].mode = modes[p];
  return c;
}

Outcome exact_inversion() {
  Outcome o;
  SceneConfig c = fixture::scene_config(10, 20, VariabilityMode::none, 1, kNoiseless, 3);
  const SceneTruth t = synthesize_scene(reference_base_library(50), c);
  const auto t0 = Clock::now();
  const UnmixingResult r = fcls(t.image_noisy, t.endmembers.mean());
  const double secs = seconds_since(t0);
  const double err = rmse(t.abundances.fractions(), r.abundances.fractions());
  o.require(err < 1e-6, "RMSE_A " + fmt(err));
  o.require(secs < 1.0, "runtime " + fmt(secs) + " s");
  o.detail = o.pass ? "RMSE_A=" + fmt(err) + " time=" + fmt(secs) + "s" : o.detail;
  return o;
}

Outcome mesma_oracle() {
  Outcome o;
  SceneConfig c = mixed_modes(fixture::scene_config(20, 25, VariabilityMode::hapke, 3, kNoiseless, 7));
  const SceneTruth t = synthesize_scene(reference_base_library(50), c);
  const UnmixingResult r = mesma(t.image_noisy, t.variants);
  const double err = rmse(t.abundances.fractions(), r.abundances.fractions());
  o.require(err < 1e-6, "RMSE_A " + fmt(err));

  std::size_t matched = 0, disagreements = 0;
  const std::size_t n_pix = t.image_noisy.pixels();
  const auto& b = t.variants;
  for (std::size_t n = 0; n < n_pix; ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    bool same_model = true;
    for (Eigen::Index p = 0; p < 3; ++p) same_model = same_model && (*r.selected_model)(p, col) == t.variant_index(p, col);
    if (same_model) ++matched;

    // independent enumeration, first strict minimum in lexicographic order
    const Vector y = t.image_noisy.pixel(n);
    double best = std::numeric_limits<double>::infinity();
    std::array<Eigen::Index, 3> best_idx{};
    Vector best_a;
    for (Eigen::Index i = 0; i < b.bundle(0).signatures.cols(); ++i) {
      for (Eigen::Index j = 0; j < b.bundle(1).signatures.cols(); ++j) {
        for (Eigen::Index k = 0; k < b.bundle(2).signatures.cols(); ++k) {
          Matrix m(y.size(), 3);
          m << b.bundle(0).signatures.col(i), b.bundle(1).signatures.col(j), b.bundle(2).signatures.col(k);
          const Vector a = oracle::fcls(m, y);
          const double re = std::sqrt((y - m * a).squaredNorm() / static_cast<double>(y.size()));
          if (re < best) {
            best = re;
            best_idx = {i, j, k};
            best_a = a;
          }
        }
      }
    }
    bool agree = std::abs(best - r.per_pixel_re[n]) <= 1e-10 &&
                 (best_a - r.abundances.pixel(n)).lpNorm<Eigen::Infinity>() <= 1e-7;
    for (Eigen::Index p = 0; p < 3; ++p) agree = agree && (*r.selected_model)(p, col) == static_cast<std::size_t>(best_idx[static_cast<std::size_t>(p)]);
    if (!agree) ++disagreements;
  }
  const double share = static_cast<double>(matched) / static_cast<double>(n_pix);
  o.require(share >= 0.99, "generating model on " + fmt(100 * share) + "% of pixels");
  o.require(disagreements == 0, std::to_string(disagreements) + " pixels differ from the enumeration oracle");
  if (o.pass) o.detail = "RMSE_A=" + fmt(err) + " model match=" + fmt(100 * share) + "% oracle agreement 500/500";
  return o;
}

Outcome sparse_reductions() {
  Outcome o;
  SceneConfig c = mixed_modes(fixture::scene_config(6, 6, VariabilityMode::hapke, 4, 30.0, 5));
  const SceneTruth t = synthesize_scene(reference_base_library(40), c);
  const Matrix lib = t.variants.flatten().columns;
  const Matrix& y = t.image_noisy.data();

  // The scaling class has collinear variants, so only the fitted vector of
  // the NNLS problem is unique here; coefficients are compared on a library
  // with full column rank below.
  const UnmixingResult r0 = sparse_su_l1(t.image_noisy, t.variants);
  double fit_gap = 0.0;
  for (Eigen::Index n = 0; n < y.cols(); ++n) {
    const Vector ref = oracle::nnls(lib, y.col(n));
    fit_gap = std::max(fit_gap, (lib * (r0.column_abundances->col(n) - ref)).lpNorm<Eigen::Infinity>());
  }
  o.require(fit_gap <= 1e-6, "lambda=0 fitted-vector gap to NNLS " + fmt(fit_gap));

  // per-band multipliers give linearly independent variants
  SceneConfig cr = fixture::scene_config(6, 6, VariabilityMode::glmm_scaling, 4, 30.0, 6);
  const SceneTruth tr = synthesize_scene(reference_base_library(40), cr);
  const Matrix lib_r = tr.variants.flatten().columns;
  const Eigen::JacobiSVD<Matrix> svd(lib_r);
  const double cond = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
  const UnmixingResult rr = sparse_su_l1(tr.image_noisy, tr.variants);
  double coef_gap = 0.0;
  for (Eigen::Index n = 0; n < tr.image_noisy.data().cols(); ++n) {
    const Vector ref = oracle::nnls(lib_r, tr.image_noisy.data().col(n));
    coef_gap = std::max(coef_gap, (rr.column_abundances->col(n) - ref).lpNorm<Eigen::Infinity>());
  }
  o.require(coef_gap <= 1e-6, "lambda=0 coefficient gap to NNLS " + fmt(coef_gap) + " (cond " + fmt(cond) + ")");

  SolverOptions big;
  big.lambda_sparse = (lib.transpose() * y).maxCoeff();
  const UnmixingResult rz = sparse_su_l1(t.image_noisy, t.variants, big);
  o.require(rz.column_abundances->cwiseAbs().maxCoeff() == 0.0, "large lambda is not zero");

  double worst_kkt = 0.0;
  for (const double lambda : {0.0, 1e-3, 1e-2, 0.1, 1.0}) {
    SolverOptions opt;
    opt.lambda_sparse = lambda;
    const UnmixingResult r = sparse_su_l1(t.image_noisy, t.variants, opt);
    for (Eigen::Index n = 0; n < y.cols(); ++n) {
      const Vector a = r.column_abundances->col(n);
      const Vector g = lib.transpose() * (lib * a - y.col(n));
      const double scale = std::max(1.0, (lib.transpose() * y.col(n)).cwiseAbs().maxCoeff());
      double viol = 0.0;
      for (Eigen::Index j = 0; j < a.size(); ++j) {
        viol = std::max(viol, a(j) > 0 ? std::abs(g(j) + lambda) : std::max(0.0, -(g(j) + lambda)));
        viol = std::max(viol, std::max(0.0, -a(j)));
      }
      worst_kkt = std::max(worst_kkt, viol / scale);
    }
  }
  o.require(worst_kkt <= 1e-5, "KKT residual " + fmt(worst_kkt));
  if (o.pass) o.detail = "NNLS fit gap=" + fmt(fit_gap) + " coef gap=" + fmt(coef_gap) + " (cond " + fmt(cond) + ") max KKT/scale=" + fmt(worst_kkt);
  return o;
}

bool nonincreasing(const std::vector<double>& h) {
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] > h[i - 1]) return false;
  }
  return !h.empty();
}

Outcome alternating_monotone() {
  Outcome o;
  std::size_t bad = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SceneConfig c = mixed_modes(fixture::scene_config(8, 8, VariabilityMode::hapke, 5, 20.0 + static_cast<double>(s), 100 + s));
    const SceneTruth t = synthesize_scene(reference_base_library(30), c);
    SolverOptions opt;
    opt.max_iters = 50;
    opt.lambda_m = 0.1 + 0.05 * static_cast<double>(s % 4);
    opt.lambda_psi = 0.01 * static_cast<double>(s % 3);
    opt.gamma_plmm = 0.2 + 0.3 * static_cast<double>(s % 5);
    if (!nonincreasing(elmm_unmix(t.image_noisy, t.endmembers.mean(), opt).log.cost_history)) ++bad;
    if (!nonincreasing(plmm_unmix(t.image_noisy, t.endmembers.mean(), opt).log.cost_history)) ++bad;
  }
  o.require(bad == 0, std::to_string(bad) + " of 40 cost sequences increase");

  // noiseless data from the scaled model itself
  std::mt19937_64 rng(77);
  const std::size_t h = 8, w = 8;
  const Matrix m0 = reference_base_library(30).class_means();
  const auto n = static_cast<Eigen::Index>(h * w);
  Matrix a(3, n), psi(3, n), y(30, n);
  std::vector<Matrix> field;
  for (Eigen::Index i = 0; i < n; ++i) {
    a.col(i) = random_simplex(rng, 3);
    const double r = static_cast<double>(i / static_cast<Eigen::Index>(w)) / static_cast<double>(h);
    const double cc = static_cast<double>(i % static_cast<Eigen::Index>(w)) / static_cast<double>(w);
    psi.col(i) << 0.85 + 0.3 * r, 1.1 - 0.2 * cc, 0.9 + 0.2 * r * cc;
    field.push_back(m0 * psi.col(i).asDiagonal());
    y.col(i) = field.back() * a.col(i);
  }
  const SpectralImage img("elmm", h, w, y);
  SolverOptions opt;
  opt.max_iters = 200;
  const UnmixingResult r = elmm_unmix(img, m0, opt);
  const double at_truth = elmm_cost(img, m0, a, psi, field, opt);
  o.require(r.log.final_cost <= at_truth, "final cost " + fmt(r.log.final_cost) + " > truth " + fmt(at_truth));
  o.require(nonincreasing(r.log.cost_history), "noiseless ELMM cost increases");
  if (o.pass) o.detail = "40/40 sequences nonincreasing; final=" + fmt(r.log.final_cost) + " <= truth=" + fmt(at_truth);
  return o;
}

fs::path source_dir() { return fs::path(VARIMIX_SOURCE_DIR); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome table_ordering() {
  Outcome o;
  const fs::path cfg = source_dir() / "configs" / "bench.json";
  BenchConfig c = parse_bench_config(slurp(cfg), cfg.parent_path());
  c.n_monte_carlo = 10;
  const auto t0 = Clock::now();
  const BenchReport rep = run_bench(c, {false, false});
  const double secs = seconds_since(t0);
  const double fc = rep.row("FCLS").rmse_a_median;
  const double me = rep.row("MESMA").rmse_a_median;
  const double l1 = rep.row("Sparse-L1").rmse_a_median;
  const double el = rep.row("ELMM").rmse_a_median;
  const double pl = rep.row("PLMM").rmse_a_median;
  o.require(rep.failed_cells() == 0, std::to_string(rep.failed_cells()) + " failed cells");
  o.require(me < fc && l1 < fc && el < fc && pl < fc, "not all below FCLS");
  o.require(me < el && l1 < el, "MESMA/Sparse-L1 not below ELMM");
  o.require(secs < 300.0, "wall time " + fmt(secs) + " s");
  o.detail = (o.pass ? "" : o.detail + " | ") + "median RMSE_A FCLS=" + fmt(fc) + " MESMA=" + fmt(me) +
             " L1=" + fmt(l1) + " ELMM=" + fmt(el) + " PLMM=" + fmt(pl) + " wall=" + fmt(secs) + "s";
  return o;
}

Outcome radiative_identities() {
  Outcome o;
  Vector w(3);
  w << 0.0, 1.0, 0.5;
  double worst = 0.0;
  for (const double mu1 : {0.3, 0.7, 1.0}) {
    for (const double mu2 : {0.4, 1.0}) {
      const Vector r = hapke_reflectance(w, mu1, mu2);
      worst = std::max(worst, std::abs(r(0)));
      worst = std::max(worst, std::abs(r(1) - oracle::hapke(1.0, mu1, mu2)));
    }
  }
  o.require(worst <= 1e-12, "Hapke endpoints off by " + fmt(worst));
  const double mid = hapke_reflectance(w, 1.0, 1.0)(2);
  o.require(std::abs(mid - 0.0857864) <= 1e-6, "Hapke mid-point " + fmt(mid));

  Vector ground = reference_base_library(30).class_means().col(0);
  double atm = 0.0;
  for (const double mu : {0.4, 0.8, 1.0}) {
    atm = std::max(atm, (atmospheric_reflectance(ground, mu, mu, 0.7, 0.3) - ground).cwiseAbs().maxCoeff());
  }
  for (const double mu1 : {0.5, 0.9}) {
    const Vector r = atmospheric_reflectance(ground, mu1, 0.6, 0.0, 0.4);
    atm = std::max(atm, (r - ground).cwiseAbs().maxCoeff());
  }
  o.require(atm <= 1e-12, "atmospheric identities off by " + fmt(atm));
  if (o.pass) o.detail = "mid-point=" + fmt(mid) + " max identity error=" + fmt(std::max(worst, atm));
  return o;
}

Outcome synthesis_snr() {
  Outcome o;
  const fs::path cfg = source_dir() / "configs" / "scene.json";
  const SceneSpec spec = parse_scene_spec(slurp(cfg), cfg.parent_path());
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    SceneConfig c = spec.config;
    c.seed = 1 + k;
    const SceneTruth t = synthesize_scene(spec.base_library(), c);
    worst = std::max(worst, std::abs(empirical_snr_db(t.image_clean, t.image_noisy) - 30.0));
  }
  o.require(worst <= 0.3, "SNR deviation " + fmt(worst) + " dB");
  if (o.pass) o.detail = "max |SNR - 30| = " + fmt(worst) + " dB over 10 runs";
  return o;
}

Outcome extraction_recovery() {
  Outcome o;
  double worst = 0.0;
  for (const std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const SceneTruth t = fixture::pure_pixel_scene(50, seed);
    const Matrix truth = t.endmembers.mean();
    const EndmemberExtraction ex = extract_endmembers(t.image_noisy, 3, seed);
    for (Eigen::Index p = 0; p < ex.signatures.cols(); ++p) {
      double best = 10.0;
      for (Eigen::Index q = 0; q < 3; ++q) best = std::min(best, oracle::angle(truth.col(q), ex.signatures.col(p)));
      worst = std::max(worst, best);
    }
  }
  o.require(worst <= 1e-6, "extracted endmember SAM " + fmt(worst));

  std::vector<std::size_t> labels;
  const Matrix sigs = fixture::clustered_signatures(20, 8, &labels);
  const ClusterResult cr = cluster_signatures(sigs, 3, ClusterMetric::spectral_angle, 4);
  std::vector<std::set<std::size_t>> contents(3);
  for (std::size_t i = 0; i < labels.size(); ++i) contents[cr.assignment[i]].insert(labels[i]);
  bool pure = true;
  for (const auto& s : contents) pure = pure && s.size() == 1;
  o.require(pure, "bundle clustering not pure");
  if (o.pass) o.detail = "max SAM=" + fmt(worst) + " rad, purity 100%";
  return o;
}

Outcome pruning() {
  Outcome o;
  const SceneTruth t = fixture::pure_pixel_scene(40, 6);
  const Matrix m = t.endmembers.mean();
  const Vector mean = t.image_noisy.data().rowwise().mean();
  const Eigen::HouseholderQR<Matrix> qr(Matrix(m.colwise() - mean));
  const Matrix q = qr.householderQ();
  const Vector orth = q.col(5);
  Matrix sigs(40, 4);
  sigs.col(0) = m.col(0);
  sigs.col(1) = 0.3 * m.col(0) + 0.7 * m.col(2);
  sigs.col(2) = mean + 0.5 * mean.minCoeff() * orth / orth.cwiseAbs().maxCoeff();
  sigs.col(3) = m.col(1);
  const PruneResult r = music_prune(SpectralLibrary({{"a", sigs}, {"b", m.col(2)}}), t.image_noisy, 2, 0.5);
  double in_max = 0.0;
  for (const std::size_t i : {0u, 1u, 3u, 4u}) in_max = std::max(in_max, r.residuals[i]);
  o.require(in_max < 0.01, "in-subspace residual " + fmt(in_max));
  o.require(r.residuals[2] > 0.9, "orthogonal residual " + fmt(r.residuals[2]));
  o.require(r.kept == std::vector<bool>({true, true, false, true, true}), "wrong signatures kept");

  const SpectralLibrary two = fixture::two_cluster_library(3);
  const Matrix reduced = count_based_reduce(two, 0.05, 0).bundle(0).signatures;
  const Matrix proto = reference_base_library(50).class_means();
  bool one_each = reduced.cols() == 2;
  if (one_each) {
    int near0 = 0, near1 = 0;
    for (Eigen::Index j = 0; j < 2; ++j) {
      near0 += oracle::angle(reduced.col(j), proto.col(0)) < 0.05;
      near1 += oracle::angle(reduced.col(j), proto.col(1)) < 0.05;
    }
    one_each = near0 == 1 && near1 == 1;
  }
  o.require(one_each, "count reduction kept " + std::to_string(reduced.cols()) + " signatures");
  if (o.pass) o.detail = "max in-subspace residual=" + fmt(in_max) + " orthogonal=" + fmt(r.residuals[2]);
  return o;
}

int run(const std::string& cmd) {
  return std::system((cmd + " > /dev/null 2>&1").c_str());
}

std::map<std::string, std::string> csv_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

Outcome cli_determinism(const std::string& cli) {
  Outcome o;
  if (cli.empty()) {
    o.require(false, "no CLI path given");
    return o;
  }
  const fs::path root = fs::temp_directory_path() / "varimix_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "scene.json") << R"({"seed": 4, "snr_db": 30, "bands": 40,
      "abundances": {"generator": "grf", "height": 16, "width": 16, "correlation_length": 4},
      "variability": {"classes": [{"mode": "atmospheric", "variants": 4}, {"mode": "hapke", "variants": 4},
                                  {"mode": "elmm_scaling", "variants": 4}]}})";
    std::ofstream(root / "l1.json") << R"({"lambda_sparse": 0.01})";
    std::ofstream(root / "bench.json") << R"({"scene_file": "scene.json",
      "extraction": {"num_runs": 3, "subset_size": 100},
      "prune": {"method": "count", "threshold": 0.02},
      "roster": [{"name": "FCLS", "algo": "fcls"}, {"name": "MESMA", "algo": "mesma"},
                 {"name": "L1", "algo": "sparse-l1", "options": {"lambda_sparse": 0.01}},
                 {"name": "ELMM", "algo": "elmm", "options": {"max_iters": 20}},
                 {"name": "PLMM", "algo": "plmm", "options": {"max_iters": 20}}],
      "n_monte_carlo": 2, "master_seed": 3})";
  }
  std::vector<std::map<std::string, std::string>> outputs;
  for (const int threads : {1, 4}) {
    const fs::path d = root / ("t" + std::to_string(threads));
    const std::string base = "\"" + cli + "\" --threads " + std::to_string(threads) + " ";
    const std::string r = root.string(), ds = d.string();
    const std::vector<std::string> steps = {
        "synth --config " + r + "/scene.json --out " + ds + "/scene",
        "extract --image " + ds + "/scene/image --runs 3 --subset 100 --seed 2 --out " + ds + "/lib.csv",
        "prune --library " + ds + "/lib.csv --method count --threshold 0.02 --out " + ds + "/lib_count.csv",
        "prune --library " + ds + "/lib.csv --method music --image " + ds + "/scene/image --out " + ds + "/lib_music.csv",
        "unmix --image " + ds + "/scene/image --algo fcls --m0 " + ds + "/scene/base.csv --out " + ds + "/fcls",
        "unmix --image " + ds + "/scene/image --algo mesma --library " + ds + "/lib_count.csv --out " + ds + "/mesma",
        "unmix --image " + ds + "/scene/image --algo sparse-l1 --library " + ds + "/lib.csv --opts " + r + "/l1.json --out " + ds + "/l1",
        "unmix --image " + ds + "/scene/image --algo sparse-l0 --library " + ds + "/lib.csv --out " + ds + "/l0",
        "unmix --image " + ds + "/scene/image --algo elmm --m0 " + ds + "/scene/base.csv --out " + ds + "/elmm",
        "unmix --image " + ds + "/scene/image --algo plmm --m0 " + ds + "/scene/base.csv --out " + ds + "/plmm",
        "bench --config " + r + "/bench.json --out " + ds + "/bench",
    };
    for (const auto& s : steps) {
      const int rc = run(base + s);
      if (rc != 0) o.require(false, "'" + s.substr(0, s.find(' ')) + "' exited " + std::to_string(rc) + " with " + std::to_string(threads) + " threads");
    }
    outputs.push_back(csv_files(d));
  }
  o.require(outputs[0].size() >= 20, "only " + std::to_string(outputs[0].size()) + " CSV files produced");
  std::size_t differing = 0;
  for (const auto& [name, bytes] : outputs[0]) {
    const auto it = outputs[1].find(name);
    if (it == outputs[1].end() || it->second != bytes) {
      ++differing;
      o.require(false, name + " differs");
    }
  }
  o.require(outputs[0].size() == outputs[1].size(), "different CSV file sets");
  if (o.pass) o.detail = std::to_string(outputs[0].size()) + " CSV files byte-identical at 1 and 4 threads";
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact inversion", exact_inversion},
      {"MESMA oracle equivalence", mesma_oracle},
      {"sparse reductions", sparse_reductions},
      {"ELMM/PLMM monotonicity", alternating_monotone},
      {"bench ordering", table_ordering},
      {"radiative identities", radiative_identities},
      {"synthesis SNR", synthesis_snr},
      {"extraction recovery", extraction_recovery},
      {"pruning", pruning},
      {"determinism", [&] { return cli_determinism(cli); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << "  "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
