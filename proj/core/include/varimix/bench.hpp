#pragma once

// Monte Carlo benchmark: synthesize, extract, optionally prune or transform,
// unmix with every roster entry, and score against the scene truth.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "varimix/config.hpp"
#include "varimix/library_ops.hpp"

namespace varimix {

enum class LibrarySource { extracted, truth_variants, file };

struct RosterEntry {
  std::string name;       // row label in the report
  std::string algorithm;  // fcls | mesma | sparse-l1 | sparse-l0 | elmm | plmm
  SolverOptions options;
  LibrarySource source = LibrarySource::extracted;
  std::filesystem::path library_file;  // source == file
};

struct PruneSpec {
  enum class Method { count, music } method = Method::count;
  double threshold = 0.05;            // count: SAM radius; music: residual
  std::size_t target_per_class = 0;   // count: 0 keeps the greedy cover as is
  std::size_t subspace_dim = 0;       // music: 0 means classes - 1
};

struct TransformSpec {
  enum class Method { stable_weights, stable_bands, fda } method = Method::stable_weights;
  std::size_t count = 0;  // stable_bands: bands kept; fda: output dimension
};

struct BenchConfig {
  SceneSpec scene;
  BundleExtractionConfig extraction;
  std::optional<PruneSpec> prune;
  std::optional<TransformSpec> transform;
  std::vector<RosterEntry> roster;
  std::size_t n_monte_carlo = 10;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "bench_out";

  void validate() const;
};

BenchConfig parse_bench_config(const std::string& json_text,
                               const std::filesystem::path& base_dir = {});

struct CellResult {
  std::string algorithm;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double rmse_a = 0.0;
  std::optional<double> rmse_m;
  std::optional<double> sam_m;
  double rmse_y = 0.0;
  double seconds = 0.0;
};

struct ReportRow {
  std::string algorithm;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double rmse_a_mean = 0.0, rmse_a_median = 0.0;
  std::optional<double> rmse_m_mean, rmse_m_median;
  std::optional<double> sam_m_mean, sam_m_median;
  double rmse_y_mean = 0.0, rmse_y_median = 0.0;
  double seconds_mean = 0.0;
};

struct BenchReport {
  std::vector<ReportRow> rows;  // roster order
  std::vector<CellResult> cells;
  std::vector<std::uint64_t> seeds;
  std::string config_digest;
  double wall_seconds = 0.0;

  std::size_t failed_cells() const;
  const ReportRow& row(const std::string& algorithm) const;
};

struct BenchOutputOptions {
  bool write_files = true;
  bool paper_scale = false;
};

BenchReport run_bench(const BenchConfig& config, const BenchOutputOptions& output = {});

/// Metrics of one result against the truth; the class order of the result
/// is mapped onto the truth by `order` (row p of the truth = row order[p]).
struct EvalRow {
  double rmse_a = 0.0;
  std::optional<double> rmse_m;
  std::optional<double> sam_m;
  double rmse_y = 0.0;
};
EvalRow eval_result(const SceneTruth& truth, const UnmixingResult& result,
                    const std::vector<std::size_t>& order);

/// Assignment minimizing the spectral angle between estimated and true
/// class signatures (both L x P): returns order with estimate column
/// order[p] matched to truth column p.
std::vector<std::size_t> align_classes(const Matrix& truth, const Matrix& estimate);

/// Minimum-cost perfect matching on a square cost matrix; result[row] = column.
std::vector<std::size_t> hungarian(const Matrix& cost);

std::string report_csv(const BenchReport& report);
std::string report_markdown(const BenchReport& report, bool paper_scale);

}  // namespace varimix
