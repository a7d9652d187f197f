#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cpol/analysis.hpp"
#include "cpol/events.hpp"
#include "cpol/geometry.hpp"

namespace cpol {

enum class EventFileFormat { jsonl, csv };

/// Full run description. The JSON document uses degrees and keV; everything
/// here is already converted to the internal radian convention.
struct RunConfig {
  SourceConfig source;
  GeometryConfig geometry;
  events::BinningScheme binning;
  bool binning_auto = true;  ///< forward edges derived from the source energy
  analysis::FitMethod method = analysis::FitMethod::direct;
  std::string output_path = "events.jsonl";
  EventFileFormat output_format = EventFileFormat::jsonl;
};

/// Defaults with the tuned realistic geometry window materialized.
RunConfig default_run_config();

/// Parse and validate a configuration document. Unknown keys anywhere are
/// rejected; ConfigError carries the JSON path of the offending field.
/// Defaults are materialized, including auto-derived binning edges.
RunConfig parse_run_config(const std::string& json_text);

/// Load a configuration file from disk (IoError on read failure).
RunConfig load_run_config(const std::string& path);

/// Canonical JSON rendering of the effective configuration (sorted keys,
/// degree/keV units); stable across runs for identical configs.
std::string run_config_to_json(const RunConfig& cfg);

/// 64-bit FNV-1a digest of the canonical configuration text.
std::uint64_t config_digest(const RunConfig& cfg);

/// FNV-1a over arbitrary bytes, used for file digests in tests and tools.
std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace cpol
