#pragma once

// JSON documents accepted by the CLI and the bench harness. Unknown keys are
// rejected with ConfigError so that typos do not silently fall back to
// defaults.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "varimix/extraction.hpp"
#include "varimix/synthesis.hpp"
#include "varimix/unmixers.hpp"

namespace varimix {

/// A scene configuration plus where its base signatures come from.
struct SceneSpec {
  SceneConfig config;
  /// Band count of the built-in reference library (ignored with a file).
  std::size_t bands = 100;
  /// Library CSV with one signature per class; empty means built-in.
  std::optional<std::filesystem::path> base_library_file;

  SpectralLibrary base_library() const;
};

SceneSpec parse_scene_spec(const std::string& json_text,
                           const std::filesystem::path& base_dir = {});
BundleExtractionConfig parse_extraction_config(const std::string& json_text);
SolverOptions parse_solver_options(const std::string& json_text);

/// Canonical JSON rendering (sorted keys, shortest round-trip numbers).
std::string to_json(const SceneSpec& spec);
std::string to_json(const SolverOptions& options);

/// FNV-1a 64-bit digest as 16 hex digits, used to fingerprint configs and payloads.
std::string digest_hex(std::string_view bytes);

}  // namespace varimix
