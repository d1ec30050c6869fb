#include "schemamatch/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "schemamatch/errors.hpp"
#include "schemamatch/eval.hpp"
#include "schemamatch/hashing.hpp"
#include "schemamatch/http_providers.hpp"
#include "schemamatch/json_util.hpp"

namespace schemamatch {

namespace fs = std::filesystem;

Providers make_providers(const RunConfig& config) {
  const auto& pc = config.providers;
  Providers p;
  if (pc.mock) {
    p.lexicon = pc.mock_lexicon.empty()
                    ? std::shared_ptr<const MockLexicon>(&MockLexicon::builtin(), [](const MockLexicon*) {})
                    : std::make_shared<const MockLexicon>(MockLexicon::load(pc.mock_lexicon));
    p.llm = std::make_shared<MockLlm>(*p.lexicon, MockLlmOptions{pc.mock_attention_span});
    p.embedder = std::make_shared<MockEmbedder>(pc.mock_dimension, *p.lexicon);
  } else {
    HttpSettings s;
    s.endpoint = pc.endpoint;
    s.timeout = std::chrono::seconds(pc.timeout_seconds);
    s.retry.attempts = pc.retry_attempts;
    if (!pc.credential_env.empty()) {
      const char* key = std::getenv(pc.credential_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw ConfigError("credential variable " + pc.credential_env + " is not set");
      }
      s.api_key = key;
    }
    auto gen = s;
    gen.model = pc.generation_model;
    auto emb = s;
    emb.model = pc.embedding_model;
    p.llm = std::make_shared<HttpGenerationProvider>(gen);
    p.embedder = std::make_shared<HttpEmbeddingProvider>(emb, pc.embedding_dimension);
  }
  if (!config.cache_dir.empty()) {
    auto cache = std::make_shared<ResponseCache>(config.cache_dir);
    p.llm = std::make_shared<CachedGenerationProvider>(p.llm, cache);
    p.embedder = std::make_shared<CachedEmbeddingProvider>(p.embedder, cache);
  }
  return p;
}

TargetIndex index_target_schema(const RunConfig& config, const SchemaDef& target, Providers& providers) {
  const auto hash = index_hash(config, target, providers.llm->id(), providers.embedder->id());
  const auto side = document_side(config.enrichment, config.flags);
  auto enrichment =
      enrich_schema(target, side.config, *providers.llm, config.providers.parallelism, side.enabled, hash);
  return build_target_index(target, std::move(enrichment), config.retrieval.bm25, *providers.embedder);
}

namespace {

fs::path artifact(const RunConfig& config, const char* name) { return config.artifact_dir / name; }

std::optional<std::string> read_if_present(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  return read_file(path);
}

// The index hash an artifact set was built with, if all three files exist
// and agree.
std::optional<std::string> stamped_hash(const RunConfig& config) {
  const auto lexical = read_if_present(artifact(config, kLexicalArtifact));
  const auto vectors = read_if_present(artifact(config, kVectorArtifact));
  const auto enrichment = read_if_present(artifact(config, kEnrichmentArtifact));
  if (!lexical || !vectors || !enrichment) return std::nullopt;
  try {
    const auto lex_hash = parse_lexical_index(*lexical, kLexicalArtifact).config_hash;
    const auto vec_hash = parse_vector_index(*vectors, kVectorArtifact).config_hash;
    const auto doc = parse_json_document(*enrichment, kEnrichmentArtifact);
    const auto enr_hash = doc.value("config_hash", std::string());
    if (lex_hash == vec_hash && vec_hash == enr_hash) return lex_hash;
  } catch (const Error&) {
  }
  return std::nullopt;
}

std::string file_hash(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace

IndexResult cmd_index(const RunConfig& config, Providers& providers, bool rebuild) {
  config.validate();
  const auto target = load_schema(config.target_schema);
  const auto hash = index_hash(config, target, providers.llm->id(), providers.embedder->id());
  if (!rebuild && stamped_hash(config) == hash) {
    const auto loaded = load_target_index(config, target, providers);
    return {hash, false, loaded.lexical.size()};
  }
  const auto index = index_target_schema(config, target, providers);
  fs::create_directories(config.artifact_dir);
  write_file_atomic(artifact(config, kEnrichmentArtifact), serialize_enrichment(index.enrichment));
  write_file_atomic(artifact(config, kLexicalArtifact), serialize_lexical_index(index.lexical, hash));
  write_file_atomic(artifact(config, kVectorArtifact), serialize_vector_index(index.vector, hash));
  return {hash, true, index.lexical.size()};
}

TargetIndex load_target_index(const RunConfig& config, const SchemaDef& target, Providers& providers) {
  const auto hash = index_hash(config, target, providers.llm->id(), providers.embedder->id());
  const auto stamped = stamped_hash(config);
  if (!stamped) {
    throw StaleArtifactError("no complete index artifacts in " + config.artifact_dir.string() +
                             "; run `index` first or pass --rebuild");
  }
  if (*stamped != hash) {
    throw StaleArtifactError("index artifacts in " + config.artifact_dir.string() + " were built with index hash " +
                             stamped->substr(0, 12) + ", current settings need " + hash.substr(0, 12) +
                             "; rerun `index` or pass --rebuild");
  }
  auto enrichment = parse_enrichment(read_file(artifact(config, kEnrichmentArtifact)), target, kEnrichmentArtifact);
  auto lexical = parse_lexical_index(read_file(artifact(config, kLexicalArtifact)), kLexicalArtifact);
  auto vectors = parse_vector_index(read_file(artifact(config, kVectorArtifact)), kVectorArtifact);
  if (vectors.index.dimension() != providers.embedder->dimension()) {
    throw StaleArtifactError("vector artifact has dimension " + std::to_string(vectors.index.dimension()) +
                             ", embedder produces " + std::to_string(providers.embedder->dimension()));
  }
  return TargetIndex{target, std::move(enrichment), std::move(lexical.index), std::move(vectors.index)};
}

fs::path manifest_path(const RunConfig& config, const MatchOptions& options) {
  std::string name = "manifest";
  if (options.needle) name += ".needle";
  if (!options.label.empty()) name += "." + options.label;
  return config.output_dir / (name + ".json");
}

RunManifest cmd_match(const RunConfig& config, Providers& providers, const MatchOptions& options) {
  config.validate();
  const auto source = load_schema(config.source_schema);
  const auto target = load_schema(config.target_schema);
  RunManifest m;
  m.source_schema = source.name();
  m.source_schema_hash = schema_hash(source);
  m.target_schema = target.name();
  m.target_schema_hash = schema_hash(target);
  m.generation_provider = providers.llm->id();
  m.flags = config.flags;
  MatchRun run;
  if (options.needle) {
    m.mode = RunManifest::Mode::kNeedle;
    m.emit_k = config.needle.top_k;
    m.config_hash = run_config_hash(config, source, target, m.generation_provider, "", true);
    run = run_needle_baseline(source, target, *providers.llm, config.needle, config.providers.parallelism);
  } else {
    m.embedding_provider = providers.embedder->id();
    m.emit_k = config.emit_k;
    m.config_hash = run_config_hash(config, source, target, m.generation_provider, m.embedding_provider, false);
    if (options.rebuild) cmd_index(config, providers, true);
    const auto index = load_target_index(config, target, providers);
    for (const char* name : {kEnrichmentArtifact, kLexicalArtifact, kVectorArtifact}) {
      m.artifacts.emplace(name, file_hash(artifact(config, name)));
    }
    MatchSettings settings{config.enrichment, config.retrieval, config.flags, config.emit_k,
                           config.providers.parallelism};
    run = match_schema(source, index, settings, *providers.llm, *providers.embedder);
  }
  m.predictions = std::move(run.predictions);
  m.failures = std::move(run.failures);
  fs::create_directories(config.output_dir);
  write_file_atomic(manifest_path(config, options), serialize_manifest(m));
  return m;
}

namespace {

fs::path sibling(const fs::path& manifest_file, std::string_view suffix) {
  auto stem = manifest_file.filename().string();
  if (stem.ends_with(".json")) stem.resize(stem.size() - 5);
  return manifest_file.parent_path() / (stem + std::string(suffix));
}

const char* kSuppressedNote =
    "HitRate@K is not reported: the ground truth maps some source columns to several targets, where a single "
    "correct target would count as a hit. Pass --force to show it anyway.";

}  // namespace

EvaluateResult cmd_evaluate(const RunConfig& config, const fs::path& manifest_file, const EvaluateOptions& options) {
  if (config.ground_truth.empty()) throw ConfigError("config: ground_truth is required for evaluation");
  const auto source = load_schema(config.source_schema);
  const auto target = load_schema(config.target_schema);
  const auto manifest_text = read_file(manifest_file);
  const auto manifest = parse_manifest(manifest_text, manifest_file.string());
  if (manifest.source_schema_hash != schema_hash(source) || manifest.target_schema_hash != schema_hash(target)) {
    throw SchemaMismatchError(manifest_file.string() +
                              " was produced from different schema files than the configured ones");
  }
  const auto gt = load_ground_truth(config.ground_truth, source, target);

  EvaluateResult result;
  result.report = evaluate_manifest(manifest, gt, config.ks, config.na_policy);
  result.rendering.show_hit_rate = !gt.has_multi_target_entries() || options.force;
  if (!result.rendering.show_hit_rate) result.rendering.note = kSuppressedNote;
  const std::map<std::string, std::string> provenance{{"config_hash", manifest.config_hash},
                                                      {"manifest_sha256", sha256_hex(manifest_text)},
                                                      {"mode", std::string(to_string(manifest.mode))}};
  result.table = render_report_table(result.report, result.rendering);
  result.report_path = sibling(manifest_file, ".report.json");
  write_file_atomic(result.report_path, serialize_report(result.report, result.rendering, provenance));
  write_file_atomic(sibling(manifest_file, ".report.txt"),
                    "config hash: " + manifest.config_hash + "\n" + result.table);
  write_file_atomic(sibling(manifest_file, ".per_query.tsv"), render_per_query_tsv(result.report));
  return result;
}

std::string cmd_ablate(const RunConfig& config, Providers& providers, const EvaluateOptions& options) {
  config.validate();
  struct Run {
    std::string label;
    EvaluateResult result;
    std::string config_hash;
  };
  std::vector<Run> runs;
  auto run_one = [&](const std::string& label, const RunConfig& variant) {
    MatchOptions mo;
    mo.label = "ablate-" + label;
    // Each variant gets its own artifact directory so document-side changes
    // never overwrite the main index.
    RunConfig c = variant;
    c.artifact_dir = config.artifact_dir / ("ablate-" + label);
    cmd_index(c, providers, false);
    const auto manifest = cmd_match(c, providers, mo);
    runs.push_back({label, cmd_evaluate(c, manifest_path(c, mo), options), manifest.config_hash});
  };
  run_one("none", config);
  for (auto name : AblationFlags::kNames) {
    RunConfig variant = config;
    variant.flags.flag(name) = false;
    try {
      variant.validate();
    } catch (const ConfigError& e) {
      spdlog::warn("skipping ablation {}: {}", name, e.what());
      continue;
    }
    run_one(std::string(name), variant);
  }
  std::vector<LabeledReport> rows;
  nlohmann::ordered_json doc{{"format", "schemamatch.ablation"}, {"version", 1}, {"runs", nlohmann::ordered_json::array()}};
  const bool show_hit = runs.front().result.rendering.show_hit_rate;
  for (const auto& r : runs) {
    const auto label = r.label == "none" ? std::string("full pipeline") : "w/o " + r.label;
    rows.push_back({label, &r.result.report});
    nlohmann::ordered_json row{{"removed", r.label}, {"config_hash", r.config_hash}};
    for (auto k : r.result.report.ks) {
      if (show_hit) row["hit_rate@" + std::to_string(k)] = r.result.report.hit_rate.at(k);
      row["recall@" + std::to_string(k)] = r.result.report.recall.at(k);
    }
    doc["runs"].push_back(std::move(row));
  }
  auto table = render_comparison_table(rows, show_hit);
  if (!show_hit) table += "\n" + std::string(kSuppressedNote) + "\n";
  write_file_atomic(config.output_dir / "ablation.txt", table);
  write_file_atomic(config.output_dir / "ablation.json", doc.dump(2) + "\n");
  return table;
}

namespace {

int exit_code_for(const std::exception_ptr& error, std::string& kind, std::string& message) {
  try {
    std::rethrow_exception(error);
  } catch (const EvaluationError& e) {
    kind = "evaluation";
    message = e.what();
    return 3;
  } catch (const ProviderError& e) {
    kind = "provider";
    message = e.what();
    return 2;
  } catch (const ValidationError& e) {
    kind = "validation";
    message = e.what();
    return 1;
  } catch (const ParseError& e) {
    kind = "parse";
    message = e.what();
    return 1;
  } catch (const std::exception& e) {
    kind = "internal";
    message = e.what();
    return 1;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Schema matching with LLM name enrichment and hybrid retrieval", "schemamatch"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path;
  bool mock = false;
  bool rebuild = false;
  bool force = false;
  std::string baseline;
  std::vector<std::string> ablate;
  std::vector<std::size_t> ks;
  std::string manifest_file;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_flag("--mock-providers", mock, "Use the deterministic offline providers");
  app.add_flag("--rebuild", rebuild, "Rebuild index artifacts even when present");
  app.add_option("--baseline", baseline, "Run a baseline instead of the pipeline")->check(CLI::IsMember({"needle"}));
  app.add_option("--ablate", ablate, "Remove a pipeline component (repeatable)")
      ->check(CLI::IsMember(std::vector<std::string>(AblationFlags::kNames.begin(), AblationFlags::kNames.end())));
  app.add_option("--k", ks, "Cutoffs to evaluate, e.g. 1,3,5")->delimiter(',');
  app.add_flag("--force", force, "Report hit rate even for m:n ground truth");
  auto* index_cmd = app.add_subcommand("index", "Enrich and index the target schema");
  auto* match_cmd = app.add_subcommand("match", "Match every source column and write a run manifest");
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a run manifest against the ground truth");
  eval_cmd->add_option("--manifest", manifest_file, "Manifest to evaluate (default: the one `match` writes)");
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the full pipeline and every single-component removal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    auto config = load_run_config(config_path);
    if (mock) config.providers.mock = true;
    for (const auto& name : ablate) config.flags.flag(name) = false;
    if (!ks.empty()) config.ks = ks;
    config.validate();
    MatchOptions mo;
    mo.rebuild = rebuild;
    mo.needle = baseline == "needle";
    if (!ablate.empty()) {
      std::vector<std::string> sorted(ablate.begin(), ablate.end());
      std::sort(sorted.begin(), sorted.end());
      sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
      mo.label = "ablate";
      for (const auto& s : sorted) mo.label += "-" + s;
    }

    if (eval_cmd->parsed()) {
      const fs::path manifest = manifest_file.empty() ? manifest_path(config, mo) : fs::path(manifest_file);
      const auto result = cmd_evaluate(config, manifest, EvaluateOptions{force});
      out << result.table;
      out << "report: " << result.report_path.string() << "\n";
      return 0;
    }
    auto providers = make_providers(config);
    if (index_cmd->parsed()) {
      const auto r = cmd_index(config, providers, rebuild);
      out << (r.rebuilt ? "built " : "up to date: ") << r.document_count << " documents, index hash "
          << r.index_hash.substr(0, 12) << " in " << config.artifact_dir.string() << "\n";
      return 0;
    }
    if (match_cmd->parsed()) {
      const auto m = cmd_match(config, providers, mo);
      out << "wrote " << manifest_path(config, mo).string() << " (" << m.predictions.size()
          << " source columns, config hash " << m.config_hash.substr(0, 12) << ")\n";
      if (!m.failures.empty()) {
        err << m.failures.size() << " source column(s) failed; see the manifest's failures list\n";
        return 2;
      }
      return 0;
    }
    if (ablate_cmd->parsed()) {
      out << cmd_ablate(config, providers, EvaluateOptions{force});
      return 0;
    }
  } catch (...) {
    std::string kind;
    std::string message;
    const int code = exit_code_for(std::current_exception(), kind, message);
    err << nlohmann::json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << "\n";
    return code;
  }
  return 1;
}

}  // namespace schemamatch
