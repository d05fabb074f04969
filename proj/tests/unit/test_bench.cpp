#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "varimix/bench.hpp"
#include "varimix/errors.hpp"
#include "varimix/unmixers.hpp"

using namespace varimix;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Result carrying the truth itself with classes listed in `order`-inverse.
UnmixingResult repackage(const SceneTruth& t, const std::vector<std::size_t>& perm) {
  std::vector<Matrix> field;
  Matrix a(t.abundances.fractions().rows(), t.abundances.fractions().cols());
  for (std::size_t p = 0; p < perm.size(); ++p) a.row(static_cast<Eigen::Index>(perm[p])) = t.abundances.fractions().row(static_cast<Eigen::Index>(p));
  for (std::size_t n = 0; n < t.endmembers.pixels(); ++n) {
    Matrix m(t.endmembers.bands(), t.endmembers.classes());
    for (std::size_t p = 0; p < perm.size(); ++p) m.col(static_cast<Eigen::Index>(perm[p])) = t.endmembers.at(n).col(static_cast<Eigen::Index>(p));
    field.push_back(m);
  }
  UnmixingResult r{AbundanceMap(a, default_class_names(perm.size()), true)};
  r.endmembers = EndmemberField(field);
  r.reconstruction = t.image_clean.data();
  return r;
}

BenchConfig tiny_config(const fs::path& out) {
  BenchConfig c;
  c.scene.config = fixture::scene_config(8, 8, VariabilityMode::hapke, 3, 30.0, 0);
  c.scene.bands = 24;
  c.extraction.num_runs = 2;
  c.extraction.subset_size = 40;
  c.n_monte_carlo = 2;
  c.master_seed = 11;
  c.output_dir = out;
  c.roster = {{"FCLS", "fcls", {}, LibrarySource::extracted, {}},
              {"MESMA", "mesma", {}, LibrarySource::truth_variants, {}},
              {"PLMM", "plmm", {}, LibrarySource::extracted, {}}};
  c.roster[2].options.max_iters = 10;
  return c;
}

}  // namespace

TEST(Hungarian, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 6;
    Matrix cost(n, n);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = std::floor(u(rng) * 5.0);  // plenty of ties
    std::vector<std::size_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0;
      for (int i = 0; i < n; ++i) s += cost(i, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto got = hungarian(cost);
    double s = 0;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) {
      const auto j = got[static_cast<std::size_t>(i)];
      ASSERT_LT(j, static_cast<std::size_t>(n));
      EXPECT_FALSE(used[j]);
      used[j] = true;
      s += cost(i, static_cast<Eigen::Index>(j));
    }
    EXPECT_DOUBLE_EQ(s, best);
  }
}

TEST(Alignment, RecoversPermutation) {
  const Matrix truth = reference_base_library(30).class_means();
  Matrix est(30, 3);
  est << truth.col(2) * 1.3, truth.col(0) * 0.9, truth.col(1);
  const auto order = align_classes(truth, est);
  EXPECT_EQ(order, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Eval, TruthScoresZeroUnderAnyPackaging) {
  const SceneTruth t = synthesize_scene(reference_base_library(20),
                                        fixture::scene_config(5, 5, VariabilityMode::atmospheric, 3, 30.0, 2));
  const std::vector<std::size_t> perm{2, 0, 1};
  const UnmixingResult r = repackage(t, perm);
  const EvalRow row = eval_result(t, r, perm);
  EXPECT_EQ(row.rmse_a, 0.0);
  EXPECT_EQ(*row.rmse_m, 0.0);
  EXPECT_NEAR(*row.sam_m, 0.0, 1e-7);
  EXPECT_EQ(row.rmse_y, 0.0);
}

TEST(Eval, MetricsInvariantToClassPermutation) {
  const SceneTruth t = synthesize_scene(reference_base_library(20),
                                        fixture::scene_config(6, 6, VariabilityMode::hapke, 3, 25.0, 3));
  const UnmixingResult base = fcls(t.image_noisy, t.endmembers.mean());
  const std::vector<std::size_t> identity{0, 1, 2};
  const EvalRow a = eval_result(t, base, identity);

  const std::vector<std::size_t> perm{1, 2, 0};
  Matrix shuffled(3, base.abundances.fractions().cols());
  for (std::size_t p = 0; p < 3; ++p) shuffled.row(static_cast<Eigen::Index>(perm[p])) = base.abundances.fractions().row(static_cast<Eigen::Index>(p));
  UnmixingResult moved{AbundanceMap(shuffled, default_class_names(3), true)};
  moved.reconstruction = base.reconstruction;
  const EvalRow b = eval_result(t, moved, perm);
  EXPECT_DOUBLE_EQ(a.rmse_a, b.rmse_a);
  EXPECT_DOUBLE_EQ(a.rmse_y, b.rmse_y);

  // Independent formula: sqrt of the mean squared abundance error.
  const Matrix d = t.abundances.fractions() - base.abundances.fractions();
  EXPECT_NEAR(a.rmse_a, std::sqrt(d.squaredNorm() / static_cast<double>(d.size())), 1e-15);
}

TEST(Bench, NoiselessFclsWithTrueEndmembersIsExact) {
  const SceneTruth t = synthesize_scene(reference_base_library(20),
                                        fixture::scene_config(6, 6, VariabilityMode::none, 1, kNoiseless, 4));
  const UnmixingResult r = fcls(t.image_noisy, t.endmembers.mean());
  EXPECT_LT(eval_result(t, r, {0, 1, 2}).rmse_a, 1e-6);
}

TEST(Bench, TinyRunIsDeterministic) {
  const fs::path root = fs::temp_directory_path() / "varimix_bench_test";
  fs::remove_all(root);
  const BenchReport a = run_bench(tiny_config(root / "a"));
  const BenchReport b = run_bench(tiny_config(root / "b"));
  EXPECT_EQ(a.failed_cells(), 0u);
  EXPECT_EQ(a.seeds, (std::vector<std::uint64_t>{11, 12}));
  EXPECT_EQ(report_csv(a), report_csv(b));
  EXPECT_EQ(slurp(root / "a" / "report.csv"), slurp(root / "b" / "report.csv"));
  EXPECT_EQ(slurp(root / "a" / "runs" / "1" / "metrics.csv"), slurp(root / "b" / "runs" / "1" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(root / "a" / "report.md"));
  EXPECT_TRUE(fs::exists(root / "a" / "plots" / "rmse_a.dat"));
  EXPECT_EQ(a.row("MESMA").runs, 2u);
  EXPECT_FALSE(a.row("FCLS").rmse_m_mean);
  EXPECT_TRUE(a.row("PLMM").rmse_m_mean);
  fs::remove_all(root);
}

TEST(Bench, FailedCellsAreRecorded) {
  BenchConfig c = tiny_config({});
  c.n_monte_carlo = 1;
  c.roster = {{"L0", "sparse-l0", {}, LibrarySource::truth_variants, {}}};
  c.roster[0].options.l0_mode = L0Mode::exhaustive;
  c.roster[0].options.l0_max_nonzeros = 9;
  c.roster[0].options.l0_budget = 10;
  const BenchReport r = run_bench(c, {false, false});
  EXPECT_EQ(r.failed_cells(), 1u);
  EXPECT_NE(r.cells[0].error.find("budget"), std::string::npos);
  EXPECT_NE(report_markdown(r, false).find("L0"), std::string::npos);
}

TEST(BenchConfig, ParsingAndValidation) {
  const std::string good = R"({"scene": {"seed": 1, "bands": 20, "abundances": {"height": 16, "width": 16}},
    "extraction": {"num_runs": 2, "subset_size": 10},
    "roster": [{"name": "F", "algo": "fcls"}, {"name": "E", "algo": "elmm", "options": {"lambda_m": 0.5}}],
    "n_monte_carlo": 3, "master_seed": 7})";
  const BenchConfig c = parse_bench_config(good);
  EXPECT_EQ(c.roster.size(), 2u);
  EXPECT_EQ(c.roster[1].options.lambda_m, 0.5);
  EXPECT_EQ(c.n_monte_carlo, 3u);
  EXPECT_EQ(c.master_seed, 7u);

  EXPECT_THROW(parse_bench_config(R"({"roster": []})"), ConfigError);
  EXPECT_THROW(parse_bench_config(R"({"scene": {}, "roster": [{"name": "F", "algo": "nope"}]})"), ConfigError);
  EXPECT_THROW(parse_bench_config(R"({"scene": {}, "roster": [{"name": "F", "algo": "fcls"}], "bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_bench_config(R"({"scene": {}, "roster": [{"name": "F", "algo": "fcls"}, {"name": "F", "algo": "mesma"}]})"), ConfigError);
  EXPECT_THROW(parse_bench_config("{not json"), ConfigError);
}
