#include "varimix/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "solver_common.hpp"
#include "varimix/errors.hpp"
#include "varimix/io.hpp"
#include "varimix/metrics.hpp"
#include "varimix/random.hpp"

namespace varimix {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

LibrarySource parse_source(const std::string& s) {
  if (s == "extracted") return LibrarySource::extracted;
  if (s == "truth_variants" || s == "truth-variants") return LibrarySource::truth_variants;
  if (s == "file") return LibrarySource::file;
  throw ConfigError("roster: unknown library source '" + s + "'");
}

const char* source_name(LibrarySource s) {
  switch (s) {
    case LibrarySource::extracted:
      return "extracted";
    case LibrarySource::truth_variants:
      return "truth_variants";
    case LibrarySource::file:
      return "file";
  }
  return "?";
}

bool uses_matrix(const std::string& algo) { return algo == "fcls" || algo == "elmm" || algo == "plmm"; }

std::string file_stem(const std::string& name) {
  std::string out;
  for (const char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// Everything a run derives from its scene, built on first use.
struct RunContext {
  const BenchConfig& config;
  std::uint64_t seed;
  SceneTruth truth;
  std::optional<SpectralLibrary> extracted;
  std::optional<Matrix> vca;

  SpectralLibrary library_for(const RosterEntry& entry) {
    switch (entry.source) {
      case LibrarySource::truth_variants:
        return truth.variants;
      case LibrarySource::file:
        return load_library(entry.library_file);
      case LibrarySource::extracted:
        break;
    }
    if (!extracted) {
      BundleExtractionConfig ec = config.extraction;
      ec.seed = derive_seed(seed, {stream::kExtraction, config.extraction.seed});
      SpectralLibrary lib = extract_bundles(truth.image_noisy, ec);
      if (config.prune) {
        const PruneSpec& p = *config.prune;
        if (p.method == PruneSpec::Method::count) {
          lib = count_based_reduce(lib, p.threshold, p.target_per_class);
        } else {
          const std::size_t dim = p.subspace_dim ? p.subspace_dim : std::max<std::size_t>(1, lib.classes() - 1);
          lib = music_prune(lib, truth.image_noisy, dim, p.threshold).library;
        }
      }
      extracted = std::move(lib);
    }
    return *extracted;
  }

  // Shared-matrix algorithms on extracted data use one pure-pixel
  // extraction over the whole image.
  Matrix matrix_for(const RosterEntry& entry) {
    if (entry.source != LibrarySource::extracted) return library_for(entry).class_means();
    if (!vca) {
      const std::size_t classes = config.extraction.classes;
      auto ex = extract_endmembers(truth.image_noisy, classes,
                                   derive_seed(seed, {stream::kExtraction, config.extraction.seed, 1}));
      vca = ex.signatures.cwiseMax(0.0);
    }
    return *vca;
  }
};

SpectralTransform make_transform(const TransformSpec& spec, const SpectralLibrary& library) {
  switch (spec.method) {
    case TransformSpec::Method::stable_weights:
      return stable_band_weights(library);
    case TransformSpec::Method::stable_bands:
      return select_stable_bands(library, spec.count).transform;
    case TransformSpec::Method::fda:
      return fda_transform(library, spec.count ? spec.count : library.classes() - 1);
  }
  throw ConfigError("transform: unknown method");
}

SceneTruth transform_truth(const SpectralTransform& t, const SceneTruth& truth) {
  std::vector<Matrix> field;
  field.reserve(truth.endmembers.pixels());
  for (const auto& m : truth.endmembers.matrices()) field.push_back(t.apply(m));
  const SignalDomain domain = t.preserves_reflectance() ? SignalDomain::reflectance : SignalDomain::transformed;
  return SceneTruth{apply_transform(t, truth.image_noisy),
                    apply_transform(t, truth.image_clean),
                    truth.abundances,
                    EndmemberField(std::move(field), domain),
                    truth.snr_db,
                    truth.seed,
                    apply_transform(t, truth.variants),
                    truth.variant_index};
}

void write_gnuplot_matrix(const fs::path& path, const Eigen::Ref<const Vector>& values, std::size_t height,
                          std::size_t width) {
  std::string out;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c) out += ' ';
      out += format_double(values(static_cast<Eigen::Index>(r * width + c)));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace

void BenchConfig::validate() const {
  if (roster.empty()) throw ConfigError("bench: roster is empty");
  if (n_monte_carlo < 1) throw ConfigError("bench: n_monte_carlo must be >= 1");
  std::set<std::string> names;
  for (const auto& e : roster) {
    if (!names.insert(e.name).second) throw ConfigError("bench: duplicate roster name '" + e.name + "'");
    static const std::set<std::string> algos{"fcls", "mesma", "sparse-l1", "sparse-l0", "elmm", "plmm"};
    if (!algos.count(e.algorithm)) throw ConfigError("bench: unknown algorithm '" + e.algorithm + "'");
    if (e.source == LibrarySource::file && e.library_file.empty()) {
      throw ConfigError("bench: roster entry '" + e.name + "' needs library_file");
    }
  }
}

BenchConfig parse_bench_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("bench config: invalid JSON: ") + e.what());
  }
  static const std::set<std::string> keys{"scene",     "scene_file",    "extraction",  "prune",     "transform",
                                          "roster",    "n_monte_carlo", "master_seed", "output_dir"};
  for (const auto& item : j.items()) {
    if (!keys.count(item.key())) throw ConfigError("bench: unknown key '" + item.key() + "'");
  }
  BenchConfig c;
  try {
    if (j.contains("scene_file")) {
      const fs::path p = base_dir / j.at("scene_file").get<std::string>();
      c.scene = parse_scene_spec(read_text_file(p), p.parent_path());
    } else if (j.contains("scene")) {
      c.scene = parse_scene_spec(j.at("scene").dump(), base_dir);
    } else {
      throw ConfigError("bench: missing scene");
    }
    c.extraction.classes = c.scene.config.variability.classes.size();
    if (j.contains("extraction")) {
      json e = j.at("extraction");
      if (!e.contains("classes")) e["classes"] = c.extraction.classes;
      c.extraction = parse_extraction_config(e.dump());
    }
    if (j.contains("prune")) {
      const auto& p = j.at("prune");
      PruneSpec spec;
      const auto method = p.value("method", std::string("count"));
      if (method == "count") {
        spec.method = PruneSpec::Method::count;
      } else if (method == "music") {
        spec.method = PruneSpec::Method::music;
        spec.threshold = 0.5;
      } else {
        throw ConfigError("bench.prune.method: expected count or music");
      }
      spec.threshold = p.value("threshold", spec.threshold);
      spec.target_per_class = p.value("target_per_class", spec.target_per_class);
      spec.subspace_dim = p.value("subspace_dim", spec.subspace_dim);
      c.prune = spec;
    }
    if (j.contains("transform")) {
      const auto& t = j.at("transform");
      TransformSpec spec;
      const auto method = t.value("method", std::string("stable_weights"));
      if (method == "stable_weights") {
        spec.method = TransformSpec::Method::stable_weights;
      } else if (method == "stable_bands") {
        spec.method = TransformSpec::Method::stable_bands;
      } else if (method == "fda") {
        spec.method = TransformSpec::Method::fda;
      } else {
        throw ConfigError("bench.transform.method: expected stable_weights, stable_bands or fda");
      }
      spec.count = t.value("count", spec.count);
      c.transform = spec;
    }
    if (!j.contains("roster") || !j.at("roster").is_array()) throw ConfigError("bench: roster must be an array");
    for (const auto& r : j.at("roster")) {
      for (const auto& item : r.items()) {
        static const std::set<std::string> rkeys{"name", "algo", "library", "library_file", "options"};
        if (!rkeys.count(item.key())) throw ConfigError("bench.roster: unknown key '" + item.key() + "'");
      }
      RosterEntry e;
      e.algorithm = r.at("algo").get<std::string>();
      e.name = r.value("name", e.algorithm);
      e.source = parse_source(r.value("library", std::string("extracted")));
      if (r.contains("library_file")) e.library_file = base_dir / r.at("library_file").get<std::string>();
      if (r.contains("options")) e.options = parse_solver_options(r.at("options").dump());
      c.roster.push_back(std::move(e));
    }
    c.n_monte_carlo = j.value("n_monte_carlo", c.n_monte_carlo);
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("output_dir")) {
      const fs::path out = j.at("output_dir").get<std::string>();
      c.output_dir = out.is_relative() ? base_dir / out : out;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bench config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::size_t> hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw DimensionError("hungarian: cost matrix must be square");
  const auto n = static_cast<std::size_t>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials-based O(n^3) assignment, 1-based with column 0 as a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t j = 1; j <= n; ++j) result[match[j] - 1] = j - 1;
  return result;
}

std::vector<std::size_t> align_classes(const Matrix& truth, const Matrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw DimensionError("align_classes: class-count mismatch between truth (" + std::to_string(truth.cols()) +
                         ") and estimate (" + std::to_string(estimate.cols()) + ")");
  }
  Matrix cost(truth.cols(), truth.cols());
  for (Eigen::Index p = 0; p < truth.cols(); ++p) {
    for (Eigen::Index q = 0; q < estimate.cols(); ++q) {
      const double nt = truth.col(p).norm();
      const double ne = estimate.col(q).norm();
      cost(p, q) = (nt == 0.0 || ne == 0.0) ? M_PI : spectral_angle(truth.col(p), estimate.col(q));
    }
  }
  return hungarian(cost);
}

EvalRow eval_result(const SceneTruth& truth, const UnmixingResult& result, const std::vector<std::size_t>& order) {
  if (result.abundances.classes() != truth.abundances.classes()) {
    throw DimensionError("eval_result: class-count mismatch");
  }
  EvalRow row;
  row.rmse_a = rmse(truth.abundances.fractions(), result.abundances.permuted(order).fractions());
  row.rmse_y = rmse(truth.image_clean.data(), result.reconstruction);
  if (result.endmembers) {
    const EndmemberField aligned = result.endmembers->permuted(order);
    row.rmse_m = rmse_field(truth.endmembers, aligned);
    row.sam_m = sam_field(truth.endmembers, aligned);
  }
  return row;
}

std::size_t BenchReport::failed_cells() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return c.failed; }));
}

const ReportRow& BenchReport::row(const std::string& algorithm) const {
  for (const auto& r : rows) {
    if (r.algorithm == algorithm) return r;
  }
  throw Error("bench report: no row named '" + algorithm + "'");
}

std::string report_csv(const BenchReport& report) {
  std::string out =
      "algorithm,runs,failed,rmse_A_mean,rmse_A_median,rmse_M_mean,rmse_M_median,sam_M_mean,sam_M_median,"
      "rmse_Y_mean,rmse_Y_median\n";
  for (const auto& r : report.rows) {
    const bool any = r.runs > r.failed;
    out += r.algorithm + ',' + std::to_string(r.runs) + ',' + std::to_string(r.failed) + ',';
    out += (any ? format_double(r.rmse_a_mean) : "") + ',' + (any ? format_double(r.rmse_a_median) : "") + ',';
    out += opt_cell(r.rmse_m_mean) + ',' + opt_cell(r.rmse_m_median) + ',';
    out += opt_cell(r.sam_m_mean) + ',' + opt_cell(r.sam_m_median) + ',';
    out += (any ? format_double(r.rmse_y_mean) : "") + ',' + (any ? format_double(r.rmse_y_median) : "") + '\n';
  }
  return out;
}

std::string report_markdown(const BenchReport& report, bool paper_scale) {
  const double s = paper_scale ? 1e4 : 1.0;
  std::string out = "# Benchmark report\n\n";
  out += "Config digest `" + report.config_digest + "`, " + std::to_string(report.seeds.size()) +
         " Monte Carlo run(s), seeds";
  for (const auto seed : report.seeds) out += ' ' + std::to_string(seed);
  out += ".\n\nMeans over successful runs";
  out += paper_scale ? "; RMSE columns multiplied by 10^4.\n\n" : ".\n\n";
  out += "| Algorithm | RMSE_A | RMSE_M | SAM_M | RMSE_Y | Time (s) |\n";
  out += "|---|---|---|---|---|---|\n";
  bool sparse = false;
  for (const auto& r : report.rows) {
    out += "| " + r.algorithm;
    if (r.failed) out += " (" + std::to_string(r.failed) + " failed)";
    if (r.runs == r.failed) {
      out += " | FAILED | FAILED | FAILED | FAILED | - |\n";
      continue;
    }
    out += " | " + fixed(r.rmse_a_mean * s, 3);
    out += " | " + (r.rmse_m_mean ? fixed(*r.rmse_m_mean * s, 3) : std::string("-"));
    out += " | " + (r.sam_m_mean ? fixed(*r.sam_m_mean, 4) : std::string("-"));
    out += " | " + fixed(r.rmse_y_mean * s, 3);
    out += " | " + fixed(r.seconds_mean, 3) + " |\n";
  }
  for (const auto& c : report.cells) sparse = sparse || c.algorithm.find("sparse") != std::string::npos;
  if (sparse) {
    out += "\nSparse rows report class sums of the column abundances, normalized per pixel.\n";
  }
  std::vector<const CellResult*> failed;
  for (const auto& c : report.cells) {
    if (c.failed) failed.push_back(&c);
  }
  if (!failed.empty()) {
    out += "\n## Failed cells\n\n";
    for (const auto* c : failed) {
      out += "- " + c->algorithm + ", run " + std::to_string(c->run) + " (seed " + std::to_string(c->seed) +
             "): " + c->error + "\n";
    }
  }
  out += "\nTotal wall time " + fixed(report.wall_seconds, 2) + " s.\n";
  return out;
}

BenchReport run_bench(const BenchConfig& config, const BenchOutputOptions& output) {
  detail::Stopwatch clock;
  config.validate();
  const SpectralLibrary base = config.scene.base_library();
  BenchReport report;
  std::string digest_source = to_json(config.scene);
  for (const auto& e : config.roster) {
    digest_source += e.name + e.algorithm + source_name(e.source) + to_json(e.options);
  }
  report.config_digest = digest_hex(digest_source);

  const fs::path out = config.output_dir;
  if (output.write_files) {
    fs::create_directories(out / "plots");
    fs::create_directories(out / "runs");
  }

  for (std::size_t k = 0; k < config.n_monte_carlo; ++k) {
    const std::uint64_t seed = config.master_seed + k;
    report.seeds.push_back(seed);
    SceneConfig scene = config.scene.config;
    scene.seed = seed;
    RunContext ctx{config, seed, synthesize_scene(base, scene), std::nullopt, std::nullopt};
    const std::size_t height = ctx.truth.image_noisy.height();
    const std::size_t width = ctx.truth.image_noisy.width();
    const fs::path run_dir = out / "runs" / std::to_string(k);
    std::string run_csv = "algorithm,seed,status,rmse_A,rmse_M,sam_M,rmse_Y\n";
    if (output.write_files) {
      fs::create_directories(run_dir);
      save_abundances(ctx.truth.abundances, run_dir / "abundances_truth.csv");
      if (k == 0) {
        for (std::size_t p = 0; p < ctx.truth.abundances.classes(); ++p) {
          write_gnuplot_matrix(out / "plots" / ("truth_class" + std::to_string(p) + ".dat"),
                               ctx.truth.abundances.fractions().row(static_cast<Eigen::Index>(p)).transpose(),
                               height, width);
        }
      }
    }

    for (const auto& entry : config.roster) {
      CellResult cell;
      cell.algorithm = entry.name;
      cell.run = k;
      cell.seed = seed;
      try {
        SolverOptions opts = entry.options;
        opts.seed = derive_seed(seed, {stream::kSolver, entry.options.seed});
        const bool matrix_algo = uses_matrix(entry.algorithm);
        SpectralLibrary library = matrix_algo ? SpectralLibrary::from_matrix(ctx.matrix_for(entry))
                                              : ctx.library_for(entry);
        const SceneTruth* truth = &ctx.truth;
        std::optional<SceneTruth> transformed;
        SpectralImage image = ctx.truth.image_noisy;
        if (config.transform) {
          // Transforms are learned from the bundle library, which carries
          // the within-class spread they need.
          const SpectralLibrary source = matrix_algo ? ctx.library_for(entry) : library;
          const SpectralTransform t = make_transform(*config.transform, source);
          library = apply_transform(t, library);
          image = apply_transform(t, image);
          transformed = transform_truth(t, ctx.truth);
          truth = &*transformed;
        }
        const Matrix m0 = library.class_means();
        // Extracted classes carry no names that match the truth, so map
        // them by spectral angle; the truth-variant library is already aligned.
        std::vector<std::size_t> order(library.classes());
        std::iota(order.begin(), order.end(), 0);
        if (entry.source != LibrarySource::truth_variants) order = align_classes(truth->endmembers.mean(), m0);
        const auto names = truth->abundances.class_names();
        detail::Stopwatch timer;
        std::optional<UnmixingResult> result;
        if (entry.algorithm == "fcls") {
          result = fcls(image, m0, opts);
        } else if (entry.algorithm == "mesma") {
          result = mesma(image, library, opts);
        } else if (entry.algorithm == "sparse-l1") {
          result = sparse_su_l1(image, library, opts);
        } else if (entry.algorithm == "sparse-l0") {
          result = sparse_su_l0(image, library, opts);
        } else if (entry.algorithm == "elmm") {
          result = elmm_unmix(image, m0, opts);
        } else {
          result = plmm_unmix(image, m0, opts);
        }
        cell.seconds = timer.seconds();
        const EvalRow row = eval_result(*truth, *result, order);
        cell.rmse_a = row.rmse_a;
        cell.rmse_m = row.rmse_m;
        cell.sam_m = row.sam_m;
        cell.rmse_y = row.rmse_y;
        if (output.write_files) {
          const AbundanceMap aligned(result->abundances.permuted(order).fractions(), names, true);
          save_abundances(aligned, run_dir / (file_stem(entry.name) + "_abundances.csv"));
          if (k == 0) {
            for (std::size_t p = 0; p < aligned.classes(); ++p) {
              write_gnuplot_matrix(out / "plots" / (file_stem(entry.name) + "_class" + std::to_string(p) + ".dat"),
                                   aligned.fractions().row(static_cast<Eigen::Index>(p)).transpose(), height, width);
            }
          }
        }
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      run_csv += entry.name + ',' + std::to_string(seed) + ',' + (cell.failed ? "failed" : "ok") + ',';
      if (!cell.failed) {
        run_csv += format_double(cell.rmse_a) + ',' + opt_cell(cell.rmse_m) + ',' + opt_cell(cell.sam_m) + ',' +
                   format_double(cell.rmse_y);
      } else {
        run_csv += ",,,";
      }
      run_csv += '\n';
      report.cells.push_back(std::move(cell));
    }
    if (output.write_files) write_text_file(run_dir / "metrics.csv", run_csv);
  }

  for (const auto& entry : config.roster) {
    ReportRow row;
    row.algorithm = entry.name;
    std::vector<double> a, m, s, y, t;
    for (const auto& c : report.cells) {
      if (c.algorithm != entry.name) continue;
      ++row.runs;
      if (c.failed) {
        ++row.failed;
        continue;
      }
      a.push_back(c.rmse_a);
      y.push_back(c.rmse_y);
      t.push_back(c.seconds);
      if (c.rmse_m) m.push_back(*c.rmse_m);
      if (c.sam_m) s.push_back(*c.sam_m);
    }
    if (!a.empty()) {
      row.rmse_a_mean = mean(a);
      row.rmse_a_median = median(a);
      row.rmse_y_mean = mean(y);
      row.rmse_y_median = median(y);
      row.seconds_mean = mean(t);
    }
    if (!m.empty()) {
      row.rmse_m_mean = mean(m);
      row.rmse_m_median = median(m);
      row.sam_m_mean = mean(s);
      row.sam_m_median = median(s);
    }
    report.rows.push_back(std::move(row));
  }
  report.wall_seconds = clock.seconds();

  if (output.write_files) {
    write_text_file(out / "report.csv", report_csv(report));
    write_text_file(out / "report.md", report_markdown(report, output.paper_scale));
    std::string timing = "algorithm\trun\tseed\tseconds\n";
    for (const auto& c : report.cells) {
      timing += c.algorithm + '\t' + std::to_string(c.run) + '\t' + std::to_string(c.seed) + '\t' +
                format_double(c.seconds) + '\n';
    }
    write_text_file(out / "timing.tsv", timing);
    // One line per run, one column per roster entry: RMSE_A series for gnuplot.
    std::string series = "# run";
    for (const auto& e : config.roster) series += ' ' + file_stem(e.name);
    series += '\n';
    for (std::size_t k = 0; k < config.n_monte_carlo; ++k) {
      series += std::to_string(k);
      for (const auto& c : report.cells) {
        if (c.run == k) series += ' ' + (c.failed ? std::string("nan") : format_double(c.rmse_a));
      }
      series += '\n';
    }
    write_text_file(out / "plots" / "rmse_a.dat", series);
  }
  return report;
}

}  // namespace varimix
