#include "schemamatch/manifest.hpp"

#include <unordered_set>

#include "schemamatch/errors.hpp"
#include "schemamatch/json_util.hpp"

namespace schemamatch {

using nlohmann::ordered_json;

std::string_view to_string(RunManifest::Mode mode) noexcept {
  return mode == RunManifest::Mode::kNeedle ? "needle" : "pipeline";
}

namespace {

ordered_json ref_json(const ColumnRef& ref) {
  return ordered_json{{"table", ref.table_name()}, {"column", ref.column_name()}};
}

ColumnRef ref_of(const JsonReader& r) { return ColumnRef(r.required_string("table"), r.required_string("column")); }

}  // namespace

std::string serialize_manifest(const RunManifest& m) {
  ordered_json flags;
  for (auto name : AblationFlags::kNames) flags[std::string(name)] = m.flags.flag(name);
  ordered_json artifacts = ordered_json::object();
  for (const auto& [file, hash] : m.artifacts) artifacts[file] = hash;
  ordered_json preds = ordered_json::array();
  for (const auto& p : m.predictions) {
    ordered_json ranked = ordered_json::array();
    for (const auto& t : p.ranked_targets) ranked.push_back(ref_json(t));
    preds.push_back(ordered_json{{"source", ref_json(p.source)}, {"ranked", std::move(ranked)}});
  }
  ordered_json failures = ordered_json::array();
  for (const auto& f : m.failures) failures.push_back(ordered_json{{"source", ref_json(f.source)}, {"error", f.error}});
  ordered_json doc{{"format", "schemamatch.run-manifest"},
                   {"version", 1},
                   {"mode", to_string(m.mode)},
                   {"config_hash", m.config_hash},
                   {"source_schema", {{"name", m.source_schema}, {"hash", m.source_schema_hash}}},
                   {"target_schema", {{"name", m.target_schema}, {"hash", m.target_schema_hash}}},
                   {"providers", {{"generation", m.generation_provider}, {"embedding", m.embedding_provider}}},
                   {"artifacts", std::move(artifacts)},
                   {"flags", std::move(flags)},
                   {"emit_k", m.emit_k},
                   {"predictions", std::move(preds)},
                   {"failures", std::move(failures)}};
  return doc.dump(2) + "\n";
}

RunManifest parse_manifest(std::string_view text, std::string_view origin) {
  const auto doc = parse_json_document(text, origin);
  JsonReader root(doc, std::string(origin));
  if (root.required_string("format") != "schemamatch.run-manifest" || root.integer_or("version", 0) != 1) {
    throw ParseError(std::string(origin) + ": not a version 1 run manifest");
  }
  RunManifest m;
  const auto mode = root.required_string("mode");
  if (mode == "needle") {
    m.mode = RunManifest::Mode::kNeedle;
  } else if (mode != "pipeline") {
    throw ParseError(root.where("mode") + ": unknown mode '" + mode + "'");
  }
  m.config_hash = root.required_string("config_hash");
  const auto src = root.object("source_schema");
  m.source_schema = src.required_string("name");
  m.source_schema_hash = src.required_string("hash");
  const auto tgt = root.object("target_schema");
  m.target_schema = tgt.required_string("name");
  m.target_schema_hash = tgt.required_string("hash");
  const auto providers = root.object("providers");
  m.generation_provider = providers.required_string("generation");
  m.embedding_provider = providers.optional_string("embedding").value_or("");
  if (root.has("artifacts")) {
    const auto arts = root.object("artifacts");
    for (const auto& [file, hash] : arts.node().items()) {
      if (!hash.is_string()) throw ParseError(arts.where(file) + ": expected string");
      m.artifacts.emplace(file, hash.get<std::string>());
    }
  }
  if (root.has("flags")) {
    const auto flags = root.object("flags");
    for (auto name : AblationFlags::kNames) m.flags.flag(name) = flags.bool_or(name, true);
  }
  const auto emit_k = root.integer_or("emit_k", 10);
  if (emit_k <= 0) throw ParseError(root.where("emit_k") + ": must be positive");
  m.emit_k = static_cast<std::size_t>(emit_k);

  std::unordered_set<ColumnRef, ColumnRefHash> sources;
  root.for_each("predictions", [&](const JsonReader& p) {
    RankedPrediction pred{ref_of(p.object("source")), {}};
    if (!sources.insert(pred.source).second) {
      throw DuplicateError(p.where("source") + ": source column " + pred.source.display() + " appears twice");
    }
    std::unordered_set<ColumnRef, ColumnRefHash> seen;
    p.for_each("ranked", [&](const JsonReader& t) {
      auto ref = ref_of(t);
      if (!seen.insert(ref).second) {
        throw DuplicateError(t.where("") + ": target " + ref.display() + " listed twice for " +
                             pred.source.display());
      }
      pred.ranked_targets.push_back(std::move(ref));
    });
    m.predictions.push_back(std::move(pred));
  });
  if (root.has("failures")) {
    root.for_each("failures", [&](const JsonReader& f) {
      m.failures.push_back({ref_of(f.object("source")), f.required_string("error")});
    });
  }
  return m;
}

}  // namespace schemamatch
