#include "varimix/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "varimix/errors.hpp"
#include "varimix/io.hpp"

namespace varimix {
namespace {

using nlohmann::json;

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

// Rejects keys outside the allowed set.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

double read_number_or_inf(const json& v, const std::string& where) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "noiseless") return kNoiseless;
    throw ConfigError(where + ": expected a number or \"inf\"");
  }
  if (v.is_null()) return kNoiseless;
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

void read_range(const json& j, const char* key, Range& r, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_number()) {
    r.lo = r.hi = v.get<double>();
    return;
  }
  if (!v.is_array() || v.size() != 2) throw ConfigError(where + "." + key + ": expected [lo, hi]");
  r.lo = v[0].get<double>();
  r.hi = v[1].get<double>();
}

ClassVariability parse_class(const json& j, const std::string& where) {
  check_keys(j, {"mode", "mu1", "mu2", "mu2_fixed", "e_sun", "e_sky", "psi", "band_scale",
                 "band_smoothness", "variants"},
             where);
  ClassVariability c;
  std::string mode = "none";
  read(j, "mode", mode, where);
  c.mode = parse_variability_mode(mode);
  read_range(j, "mu1", c.mu1, where);
  read_range(j, "mu2", c.mu2, where);
  read(j, "mu2_fixed", c.mu2_fixed, where);
  read(j, "e_sun", c.e_sun, where);
  read(j, "e_sky", c.e_sky, where);
  read_range(j, "psi", c.psi, where);
  read_range(j, "band_scale", c.band_scale, where);
  read(j, "band_smoothness", c.band_smoothness, where);
  read(j, "variants", c.variants, where);
  return c;
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

}  // namespace

SpectralLibrary SceneSpec::base_library() const {
  if (base_library_file) return load_library(*base_library_file);
  return reference_base_library(bands);
}

SceneSpec parse_scene_spec(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json j = parse(json_text, "scene config");
  const std::string where = "scene";
  check_keys(j, {"seed", "snr_db", "bands", "base_library", "abundances", "variability"}, where);
  SceneSpec spec;
  read(j, "seed", spec.config.seed, where);
  if (j.contains("snr_db")) spec.config.snr_db = read_number_or_inf(j.at("snr_db"), where + ".snr_db");
  read(j, "bands", spec.bands, where);
  if (j.contains("base_library")) {
    const auto name = j.at("base_library").get<std::string>();
    if (name != "builtin") {
      std::filesystem::path p(name);
      spec.base_library_file = p.is_relative() ? base_dir / p : p;
    }
  }
  std::size_t classes = 3;
  if (spec.base_library_file) {
    classes = spec.base_library().classes();
  }

  auto& ac = spec.config.abundances;
  if (j.contains("abundances")) {
    const auto& a = j.at("abundances");
    const std::string w = where + ".abundances";
    check_keys(a, {"generator", "height", "width", "alpha", "correlation_length", "sharpness",
                   "pure_fraction", "seed"},
               w);
    std::string gen = "grf";
    read(a, "generator", gen, w);
    if (gen == "grf") {
      ac.generator = AbundanceGenerator::grf;
    } else if (gen == "dirichlet") {
      ac.generator = AbundanceGenerator::dirichlet;
    } else {
      throw ConfigError(w + ".generator: expected grf or dirichlet, got '" + gen + "'");
    }
    read(a, "height", ac.height, w);
    read(a, "width", ac.width, w);
    read(a, "alpha", ac.alpha, w);
    read(a, "correlation_length", ac.correlation_length, w);
    read(a, "sharpness", ac.sharpness, w);
    read(a, "pure_fraction", ac.pure_fraction, w);
    read(a, "seed", ac.seed, w);
  }

  auto& vc = spec.config.variability;
  vc.classes.assign(classes, ClassVariability{});
  if (j.contains("variability")) {
    const auto& v = j.at("variability");
    const std::string w = where + ".variability";
    check_keys(v, {"seed", "classes", "all"}, w);
    read(v, "seed", vc.seed, w);
    if (v.contains("all")) vc.classes.assign(classes, parse_class(v.at("all"), w + ".all"));
    if (v.contains("classes")) {
      const auto& list = v.at("classes");
      if (!list.is_array()) throw ConfigError(w + ".classes: expected an array");
      vc.classes.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        vc.classes.push_back(parse_class(list[i], w + ".classes[" + std::to_string(i) + "]"));
      }
    }
  }
  try {
    ac.validate(vc.classes.size());
    vc.validate(vc.classes.size());
  } catch (const Error& e) {
    throw ConfigError(std::string("scene config: ") + e.what());
  }
  if (vc.classes.size() != classes && !spec.base_library_file) {
    throw ConfigError("scene config: the built-in base library has 3 classes, variability lists " +
                      std::to_string(vc.classes.size()));
  }
  return spec;
}

std::string to_json(const SceneSpec& spec) {
  json j;
  j["seed"] = spec.config.seed;
  if (std::isinf(spec.config.snr_db)) {
    j["snr_db"] = "inf";
  } else {
    j["snr_db"] = spec.config.snr_db;
  }
  j["bands"] = spec.bands;
  j["base_library"] = spec.base_library_file ? spec.base_library_file->generic_string() : "builtin";
  const auto& ac = spec.config.abundances;
  j["abundances"] = {{"generator", ac.generator == AbundanceGenerator::grf ? "grf" : "dirichlet"},
                     {"height", ac.height},
                     {"width", ac.width},
                     {"alpha", ac.alpha},
                     {"correlation_length", ac.correlation_length},
                     {"sharpness", ac.sharpness},
                     {"pure_fraction", ac.pure_fraction},
                     {"seed", ac.seed}};
  json classes = json::array();
  for (const auto& c : spec.config.variability.classes) {
    classes.push_back({{"mode", to_string(c.mode)},
                       {"mu1", range_json(c.mu1)},
                       {"mu2", range_json(c.mu2)},
                       {"mu2_fixed", c.mu2_fixed},
                       {"e_sun", c.e_sun},
                       {"e_sky", c.e_sky},
                       {"psi", range_json(c.psi)},
                       {"band_scale", range_json(c.band_scale)},
                       {"band_smoothness", c.band_smoothness},
                       {"variants", c.variants}});
  }
  j["variability"] = {{"seed", spec.config.variability.seed}, {"classes", classes}};
  return j.dump(2);
}

BundleExtractionConfig parse_extraction_config(const std::string& json_text) {
  const json j = parse(json_text, "extraction config");
  const std::string where = "extraction";
  check_keys(j, {"classes", "num_runs", "subset_size", "with_replacement", "cluster_metric", "seed"}, where);
  BundleExtractionConfig c;
  read(j, "classes", c.classes, where);
  read(j, "num_runs", c.num_runs, where);
  read(j, "subset_size", c.subset_size, where);
  read(j, "with_replacement", c.with_replacement, where);
  if (j.contains("cluster_metric")) c.cluster_metric = parse_cluster_metric(j.at("cluster_metric").get<std::string>());
  read(j, "seed", c.seed, where);
  return c;
}

SolverOptions parse_solver_options(const std::string& json_text) {
  const json j = parse(json_text, "solver options");
  const std::string where = "options";
  check_keys(j, {"max_iters", "tol", "rho", "lambda_sparse", "lambda_m", "lambda_psi", "gamma_plmm", "seed",
                 "fcls_method", "admm_max_iters", "admm_tol", "mesma_budget", "re_threshold",
                 "sparse_max_iters", "sparse_tol", "l0_max_nonzeros", "l0_mode", "l0_budget"},
             where);
  SolverOptions o;
  read(j, "max_iters", o.max_iters, where);
  read(j, "tol", o.tol, where);
  read(j, "rho", o.rho, where);
  read(j, "lambda_sparse", o.lambda_sparse, where);
  read(j, "lambda_m", o.lambda_m, where);
  read(j, "lambda_psi", o.lambda_psi, where);
  read(j, "gamma_plmm", o.gamma_plmm, where);
  read(j, "seed", o.seed, where);
  if (j.contains("fcls_method")) {
    const auto m = j.at("fcls_method").get<std::string>();
    if (m == "active_set") {
      o.fcls_method = FclsMethod::active_set;
    } else if (m == "admm") {
      o.fcls_method = FclsMethod::admm;
    } else {
      throw ConfigError(where + ".fcls_method: expected active_set or admm");
    }
  }
  read(j, "admm_max_iters", o.admm_max_iters, where);
  read(j, "admm_tol", o.admm_tol, where);
  read(j, "mesma_budget", o.mesma_budget, where);
  if (j.contains("re_threshold") && !j.at("re_threshold").is_null()) {
    o.re_threshold = j.at("re_threshold").get<double>();
  }
  read(j, "sparse_max_iters", o.sparse_max_iters, where);
  read(j, "sparse_tol", o.sparse_tol, where);
  read(j, "l0_max_nonzeros", o.l0_max_nonzeros, where);
  if (j.contains("l0_mode")) {
    const auto m = j.at("l0_mode").get<std::string>();
    if (m == "greedy") {
      o.l0_mode = L0Mode::greedy;
    } else if (m == "exhaustive") {
      o.l0_mode = L0Mode::exhaustive;
    } else {
      throw ConfigError(where + ".l0_mode: expected greedy or exhaustive");
    }
  }
  read(j, "l0_budget", o.l0_budget, where);
  return o;
}

std::string to_json(const SolverOptions& o) {
  json j = {{"max_iters", o.max_iters},
            {"tol", o.tol},
            {"rho", o.rho},
            {"lambda_sparse", o.lambda_sparse},
            {"lambda_m", o.lambda_m},
            {"lambda_psi", o.lambda_psi},
            {"gamma_plmm", o.gamma_plmm},
            {"seed", o.seed},
            {"fcls_method", o.fcls_method == FclsMethod::admm ? "admm" : "active_set"},
            {"admm_max_iters", o.admm_max_iters},
            {"admm_tol", o.admm_tol},
            {"mesma_budget", o.mesma_budget},
            {"sparse_max_iters", o.sparse_max_iters},
            {"sparse_tol", o.sparse_tol},
            {"l0_max_nonzeros", o.l0_max_nonzeros},
            {"l0_mode", o.l0_mode == L0Mode::exhaustive ? "exhaustive" : "greedy"},
            {"l0_budget", o.l0_budget}};
  j["re_threshold"] = o.re_threshold ? json(*o.re_threshold) : json(nullptr);
  return j.dump(2);
}

std::string digest_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace varimix
