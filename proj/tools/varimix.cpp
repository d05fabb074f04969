// varimix command-line front end.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "varimix/bench.hpp"
#include "varimix/config.hpp"
#include "varimix/errors.hpp"
#include "varimix/extraction.hpp"
#include "varimix/io.hpp"
#include "varimix/library_ops.hpp"
#include "varimix/parallel.hpp"
#include "varimix/synthesis.hpp"
#include "varimix/unmixers.hpp"

namespace fs = std::filesystem;
using namespace varimix;

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

int run_synth(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  SceneSpec spec = parse_scene_spec(read_text_file(config_path), config_path.parent_path());
  if (seed) spec.config.seed = *seed;
  const SpectralLibrary base = spec.base_library();
  const SceneTruth truth = synthesize_scene(base, spec.config);
  fs::create_directories(out);
  save_image(truth.image_noisy, out / "image");
  save_image(truth.image_clean, out / "clean");
  save_abundances(truth.abundances, out / "abundances.csv");
  save_endmember_field(truth.endmembers, truth.image_noisy.height(), truth.image_noisy.width(), out / "endmembers");
  save_library(truth.variants, out / "variants.csv");
  save_library(base, out / "base.csv");
  const std::string payload = read_text_file(out / "image" / "data.bin");
  write_json(out / "truth_meta.json", {{"seed", spec.config.seed},
                                       {"snr_db", std::isinf(truth.snr_db) ? nlohmann::json("inf")
                                                                           : nlohmann::json(truth.snr_db)},
                                       {"config_digest", digest_hex(to_json(spec))},
                                       {"image_digest", digest_hex(payload)},
                                       {"classes", truth.abundances.class_names()}});
  std::cout << "wrote scene (" << truth.image_noisy.height() << "x" << truth.image_noisy.width() << ", "
            << truth.image_noisy.bands() << " bands) to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varimix: spectral unmixing under endmember variability"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (default: VARIMIX_THREADS or all cores)");

  // synth
  auto* synth = app.add_subcommand("synth", "synthesize a ground-truthed scene");
  fs::path synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--config", synth_config, "scene JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the scene seed");

  // extract
  auto* extract = app.add_subcommand("extract", "extract a bundle library (or one signature per class)");
  fs::path ex_image, ex_out, ex_config;
  BundleExtractionConfig ex_cfg;
  std::string ex_metric = "spectral_angle";
  bool ex_without = false;
  bool ex_endmembers = false;
  extract->add_option("--image", ex_image, "image directory")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--config", ex_config, "extraction JSON (overrides the flags)")->check(CLI::ExistingFile);
  extract->add_option("--classes", ex_cfg.classes, "number of classes");
  extract->add_option("--runs", ex_cfg.num_runs, "number of subset runs");
  extract->add_option("--subset", ex_cfg.subset_size, "pixels per subset");
  extract->add_option("--seed", ex_cfg.seed, "seed");
  extract->add_option("--metric", ex_metric, "spectral_angle | euclidean");
  extract->add_flag("--without-replacement", ex_without, "draw subsets without replacement");
  extract->add_flag("--endmembers", ex_endmembers, "single pure-pixel extraction on the whole image");
  extract->add_option("--out", ex_out, "library CSV")->required();

  // prune
  auto* prune = app.add_subcommand("prune", "reduce a library");
  fs::path pr_library, pr_image, pr_out;
  std::string pr_method = "count";
  double pr_threshold = -1.0;
  std::size_t pr_target = 0, pr_dim = 0;
  prune->add_option("--library", pr_library, "library CSV")->required()->check(CLI::ExistingFile);
  prune->add_option("--method", pr_method, "count | music");
  prune->add_option("--threshold", pr_threshold, "count: SAM radius (0.05); music: residual (0.5)");
  prune->add_option("--target", pr_target, "count: max signatures per class (0 = no cap)");
  prune->add_option("--image", pr_image, "music: image directory");
  prune->add_option("--subspace-dim", pr_dim, "music: subspace dimension (0 = classes - 1)");
  prune->add_option("--out", pr_out, "library CSV")->required();

  // transform
  auto* transform = app.add_subcommand("transform", "learn a spectral transform from a library");
  fs::path tr_library, tr_out, tr_image, tr_image_out, tr_library_out;
  std::string tr_method = "stable_weights";
  std::size_t tr_count = 0;
  double tr_below = -1.0;
  transform->add_option("--library", tr_library, "library CSV")->required()->check(CLI::ExistingFile);
  transform->add_option("--method", tr_method, "stable_weights | stable_bands | fda");
  transform->add_option("--count", tr_count, "stable_bands: bands kept; fda: output dimension");
  transform->add_option("--below", tr_below, "stable_bands: keep bands with index <= this instead of --count");
  transform->add_option("--out", tr_out, "transform JSON")->required();
  transform->add_option("--apply-image", tr_image, "image directory to transform");
  transform->add_option("--image-out", tr_image_out, "transformed image directory");
  transform->add_option("--library-out", tr_library_out, "transformed library CSV");

  // unmix
  auto* unmix = app.add_subcommand("unmix", "unmix an image");
  fs::path um_image, um_library, um_m0, um_opts, um_out;
  std::string um_algo;
  std::optional<double> um_re_threshold;
  unmix->add_option("--image", um_image, "image directory")->required()->check(CLI::ExistingDirectory);
  unmix->add_option("--algo", um_algo, "fcls | mesma | sparse-l1 | sparse-l0 | elmm | plmm")
      ->required()
      ->check(CLI::IsMember({"fcls", "mesma", "sparse-l1", "sparse-l0", "elmm", "plmm"}));
  auto* lib_opt = unmix->add_option("--library", um_library, "library CSV")->check(CLI::ExistingFile);
  auto* m0_opt = unmix->add_option("--m0", um_m0, "L x P matrix as a library CSV, one row per class")
                     ->check(CLI::ExistingFile);
  lib_opt->excludes(m0_opt);
  unmix->add_option("--opts", um_opts, "solver options JSON")->check(CLI::ExistingFile);
  unmix->add_option("--re-threshold", um_re_threshold, "MESMA early-stop RE threshold");
  unmix->add_option("--out", um_out, "result directory")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Monte Carlo benchmark");
  fs::path bench_config, bench_out;
  bool paper_scale = false;
  bench->add_option("--config", bench_config, "bench JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", bench_out, "override output_dir");
  bench->add_flag("--paper-scale", paper_scale, "multiply RMSE columns of report.md by 1e4");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_num_threads(threads);

  try {
    if (synth->parsed()) return run_synth(synth_config, synth_out, synth_seed);

    if (extract->parsed()) {
      const SpectralImage image = load_image(ex_image);
      if (!ex_config.empty()) {
        ex_cfg = parse_extraction_config(read_text_file(ex_config));
      } else {
        ex_cfg.cluster_metric = parse_cluster_metric(ex_metric);
        ex_cfg.with_replacement = !ex_without;
      }
      if (ex_endmembers) {
        const auto ex = extract_endmembers(image, ex_cfg.classes, ex_cfg.seed);
        for (const auto& w : ex.warnings) std::cerr << "warning: " << w << "\n";
        save_library(SpectralLibrary::from_matrix(ex.signatures.cwiseMax(0.0), default_class_names(ex_cfg.classes, "em")),
                     ex_out);
      } else {
        save_library(extract_bundles(image, ex_cfg), ex_out);
      }
      return 0;
    }

    if (prune->parsed()) {
      const SpectralLibrary lib = load_library(pr_library);
      if (pr_method == "count") {
        save_library(count_based_reduce(lib, pr_threshold < 0 ? 0.05 : pr_threshold, pr_target), pr_out);
      } else if (pr_method == "music") {
        if (pr_image.empty()) throw ConfigError("prune --method music needs --image");
        const std::size_t dim = pr_dim ? pr_dim : std::max<std::size_t>(1, lib.classes() - 1);
        const PruneResult r = music_prune(lib, load_image(pr_image), dim, pr_threshold < 0 ? 0.5 : pr_threshold);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        save_library(r.library, pr_out);
      } else {
        throw ConfigError("prune: unknown method '" + pr_method + "'");
      }
      return 0;
    }

    if (transform->parsed()) {
      const SpectralLibrary lib = load_library(tr_library);
      std::optional<SpectralTransform> t;
      if (tr_method == "stable_weights") {
        t = stable_band_weights(lib);
      } else if (tr_method == "stable_bands") {
        BandSelection sel = tr_below >= 0 ? select_stable_bands_below(lib, tr_below) : select_stable_bands(lib, tr_count);
        for (const auto& w : sel.warnings) std::cerr << "warning: " << w << "\n";
        t = sel.transform;
      } else if (tr_method == "fda") {
        t = fda_transform(lib, tr_count ? tr_count : lib.classes() - 1);
      } else {
        throw ConfigError("transform: unknown method '" + tr_method + "'");
      }
      write_text_file(tr_out, t->to_json());
      if (!tr_image.empty()) {
        if (tr_image_out.empty()) throw ConfigError("transform --apply-image needs --image-out");
        save_image(apply_transform(*t, load_image(tr_image)), tr_image_out);
      }
      if (!tr_library_out.empty()) save_library(apply_transform(*t, lib), tr_library_out);
      return 0;
    }

    if (unmix->parsed()) {
      const SpectralImage image = load_image(um_image);
      SolverOptions opts = um_opts.empty() ? SolverOptions{} : parse_solver_options(read_text_file(um_opts));
      if (um_re_threshold) opts.re_threshold = um_re_threshold;
      if (um_library.empty() && um_m0.empty()) throw ConfigError("unmix needs --library or --m0");
      // Signals outside [0, inf) come from a transform; load them as such.
      const SpectralLibrary lib = [&] {
        const fs::path p = um_library.empty() ? um_m0 : um_library;
        try {
          return load_library(p);
        } catch (const DomainError&) {
          return load_library(p, SignalDomain::transformed);
        }
      }();
      const Matrix m0 = lib.class_means();
      UnmixingResult r = [&] {
        if (um_algo == "fcls") return fcls(image, m0, opts, lib.class_names());
        if (um_algo == "mesma") return mesma(image, lib, opts);
        if (um_algo == "sparse-l1") return sparse_su_l1(image, lib, opts);
        if (um_algo == "sparse-l0") return sparse_su_l0(image, lib, opts);
        if (um_algo == "elmm") return elmm_unmix(image, m0, opts, {}, lib.class_names());
        return plmm_unmix(image, m0, opts, {}, lib.class_names());
      }();
      fs::create_directories(um_out);
      save_abundances(r.abundances, um_out / "abundances.csv");
      if (r.endmembers) save_endmember_field(*r.endmembers, image.height(), image.width(), um_out / "endmembers");
      if (r.column_abundances) {
        const FlatLibrary flat = lib.flatten();
        std::vector<std::string> names;
        for (std::size_t i = 0; i < flat.class_of.size(); ++i) {
          names.push_back(flat.class_names[flat.class_of[i]] + "_" + std::to_string(i - flat.offsets[flat.class_of[i]]));
        }
        save_abundances(AbundanceMap(*r.column_abundances, names, false), um_out / "column_abundances.csv");
      }
      if (r.scaling_factors) {
        save_abundances(AbundanceMap(*r.scaling_factors, lib.class_names(), false), um_out / "scaling.csv");
      }
      Matrix re(1, static_cast<Eigen::Index>(r.per_pixel_re.size()));
      for (std::size_t n = 0; n < r.per_pixel_re.size(); ++n) re(0, static_cast<Eigen::Index>(n)) = r.per_pixel_re[n];
      save_image(SpectralImage("re", image.height(), image.width(), re), um_out / "re");
      nlohmann::json log = {{"algorithm", um_algo},
                            {"iterations", r.log.iterations},
                            {"final_cost", r.log.final_cost},
                            {"converged", r.log.converged},
                            {"wall_seconds", r.log.wall_seconds},
                            {"cost_history", r.log.cost_history},
                            {"warnings", r.log.warnings},
                            {"zero_mass_pixels", r.zero_mass_pixels}};
      write_json(um_out / "solver_log.json", log);
      for (const auto& w : r.log.warnings) std::cerr << "warning: " << w << "\n";
      return 0;
    }

    if (bench->parsed()) {
      BenchConfig cfg = parse_bench_config(read_text_file(bench_config), bench_config.parent_path());
      if (!bench_out.empty()) cfg.output_dir = bench_out;
      const BenchReport report = run_bench(cfg, {true, paper_scale});
      std::cout << report_markdown(report, paper_scale);
      if (report.failed_cells() > 0) {
        std::cerr << report.failed_cells() << " failed cell(s)\n";
        return 3;
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
