#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "schemamatch/pipeline.hpp"

namespace schemamatch {

// Everything `evaluate` needs from a match run, plus the hashes that tie the
// predictions to the inputs that produced them.
struct RunManifest {
  enum class Mode { kPipeline, kNeedle };

  Mode mode = Mode::kPipeline;
  std::string config_hash;
  std::string source_schema;
  std::string source_schema_hash;
  std::string target_schema;
  std::string target_schema_hash;
  std::string generation_provider;
  std::string embedding_provider;           // empty in needle mode
  std::map<std::string, std::string> artifacts;  // file name -> sha256 of contents
  AblationFlags flags;
  std::size_t emit_k = 10;
  std::vector<RankedPrediction> predictions;
  std::vector<ColumnFailure> failures;

  bool baseline() const noexcept { return mode == Mode::kNeedle; }
};

std::string_view to_string(RunManifest::Mode mode) noexcept;

// JSON with a fixed key order and no timestamps, so equal runs give equal
// bytes.
std::string serialize_manifest(const RunManifest& manifest);
// Throws ParseError; DuplicateError when a prediction lists a target twice
// or a source column appears twice.
RunManifest parse_manifest(std::string_view text, std::string_view origin = "<memory>");

}  // namespace schemamatch
