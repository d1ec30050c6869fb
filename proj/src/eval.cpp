#include "schemamatch/eval.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "schemamatch/errors.hpp"
#include "schemamatch/normalize.hpp"

namespace schemamatch {

namespace {

struct Contribution {
  std::size_t numerator;
  std::size_t denominator;
};

// Contribution of one query, or nothing when the policy leaves it out.
std::optional<Contribution> contribution(const RankedPrediction& p, const std::vector<ColumnRef>& truth,
                                         std::size_t k, NaPolicy policy) {
  if (truth.empty()) {
    if (policy == NaPolicy::kExclude) return std::nullopt;
    return Contribution{p.ranked_targets.empty() ? 1u : 0u, 1};
  }
  const std::unordered_set<ColumnRef, ColumnRefHash> gt(truth.begin(), truth.end());
  std::size_t found = 0;
  const auto n = std::min(k, p.ranked_targets.size());
  for (std::size_t i = 0; i < n; ++i) found += gt.count(p.ranked_targets[i]);
  return Contribution{found, truth.size()};
}

const std::vector<ColumnRef>& truth_for(const RankedPrediction& p, const GroundTruth& gt) {
  const auto* truth = gt.find(p.source);
  if (!truth) throw MissingGroundTruthError("no ground truth for source column " + p.source.display());
  return *truth;
}

void check_k(std::size_t k) {
  if (k == 0) throw ValidationError("K must be at least 1");
}

// (sum of n_i / d_i) / count, rounded once when the common denominator fits.
double mean_of_fractions(const std::vector<Contribution>& parts) {
  if (parts.empty()) return 0.0;
  // Numerator and denominator stay below 2^53, so both convert exactly and
  // the division rounds once.
  constexpr unsigned long long kExactLimit = 1ull << 53;
  const unsigned long long count = parts.size();
  unsigned long long lcm = 1;
  for (const auto& c : parts) {
    lcm = std::lcm(lcm, static_cast<unsigned long long>(c.denominator));
    if (lcm > kExactLimit / count) {
      lcm = 0;
      break;
    }
  }
  if (lcm != 0) {
    unsigned long long numerator = 0;
    for (const auto& c : parts) numerator += c.numerator * (lcm / c.denominator);
    return static_cast<double>(numerator) / static_cast<double>(lcm * count);
  }
  std::vector<long double> values;
  for (const auto& c : parts) values.push_back(static_cast<long double>(c.numerator) / c.denominator);
  std::sort(values.begin(), values.end());
  long double sum = 0;
  for (auto v : values) sum += v;
  return static_cast<double>(sum / static_cast<long double>(count));
}

}  // namespace

double hit_rate_at_k(std::span<const RankedPrediction> predictions, const GroundTruth& gt, std::size_t k,
                     NaPolicy policy) {
  check_k(k);
  std::size_t n = 0;
  std::size_t hits = 0;
  for (const auto& p : predictions) {
    if (auto c = contribution(p, truth_for(p, gt), k, policy)) {
      ++n;
      hits += c->numerator > 0 ? 1 : 0;
    }
  }
  return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

double recall_at_k(std::span<const RankedPrediction> predictions, const GroundTruth& gt, std::size_t k,
                   NaPolicy policy) {
  check_k(k);
  std::vector<Contribution> parts;
  for (const auto& p : predictions) {
    if (auto c = contribution(p, truth_for(p, gt), k, policy)) parts.push_back(*c);
  }
  return mean_of_fractions(parts);
}

MetricsReport evaluate_predictions(std::span<const RankedPrediction> predictions, const GroundTruth& gt,
                                   std::vector<std::size_t> ks, NaPolicy policy, std::string dataset) {
  if (ks.empty()) throw ValidationError("at least one K is required");
  for (auto k : ks) check_k(k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  MetricsReport report;
  report.dataset = std::move(dataset);
  report.na_policy = policy;
  report.multi_target = gt.has_multi_target_entries();
  report.ks = ks;
  for (const auto& p : predictions) {
    const auto& truth = truth_for(p, gt);
    QueryResult q{p.source, truth, p.top(ks.back()), true, {}, {}, {}};
    for (auto k : ks) {
      const auto c = contribution(p, truth, k, policy);
      if (!c) {
        q.counted = false;
        break;
      }
      q.hit[k] = c->numerator > 0;
      q.found[k] = truth.empty() ? 0 : c->numerator;
      q.recall[k] = static_cast<double>(c->numerator) / static_cast<double>(c->denominator);
    }
    if (q.counted) {
      ++report.n_queries;
    } else {
      ++report.excluded_na;
    }
    report.per_query.push_back(std::move(q));
  }
  for (auto k : ks) {
    report.hit_rate[k] = hit_rate_at_k(predictions, gt, k, policy);
    report.recall[k] = recall_at_k(predictions, gt, k, policy);
  }
  return report;
}

MetricsReport evaluate_manifest(const RunManifest& manifest, const GroundTruth& gt, std::vector<std::size_t> ks,
                                NaPolicy policy) {
  if (fold_case(manifest.source_schema) != fold_case(gt.source_schema()) ||
      fold_case(manifest.target_schema) != fold_case(gt.target_schema())) {
    throw SchemaMismatchError("manifest matches " + manifest.source_schema + " -> " + manifest.target_schema +
                              " but the ground truth is for " + gt.source_schema() + " -> " + gt.target_schema());
  }
  return evaluate_predictions(manifest.predictions, gt, std::move(ks), policy,
                              manifest.source_schema + " -> " + manifest.target_schema);
}

std::string format_percent(double value) { return fmt::format("{:.2f}%", value * 100.0); }

std::string render_report_table(const MetricsReport& report, const ReportOptions& options) {
  std::string out = fmt::format("dataset: {}\nqueries: {}", report.dataset, report.n_queries);
  if (report.excluded_na > 0) out += fmt::format(" ({} NA excluded)", report.excluded_na);
  out += "\n\n";
  if (options.show_hit_rate) {
    out += fmt::format("{:>4}  {:>10}  {:>10}\n", "K", "HitRate@K", "Recall@K");
  } else {
    out += fmt::format("{:>4}  {:>10}\n", "K", "Recall@K");
  }
  for (auto k : report.ks) {
    if (options.show_hit_rate) {
      out += fmt::format("{:>4}  {:>10}  {:>10}\n", k, format_percent(report.hit_rate.at(k)),
                         format_percent(report.recall.at(k)));
    } else {
      out += fmt::format("{:>4}  {:>10}\n", k, format_percent(report.recall.at(k)));
    }
  }
  if (!options.note.empty()) out += "\n" + options.note + "\n";
  return out;
}

std::string serialize_report(const MetricsReport& report, const ReportOptions& options,
                             const std::map<std::string, std::string>& provenance) {
  using nlohmann::ordered_json;
  ordered_json metrics = ordered_json::array();
  for (auto k : report.ks) {
    ordered_json row{{"k", k}};
    if (options.show_hit_rate) row["hit_rate"] = report.hit_rate.at(k);
    row["recall"] = report.recall.at(k);
    metrics.push_back(std::move(row));
  }
  ordered_json queries = ordered_json::array();
  for (const auto& q : report.per_query) {
    ordered_json truth = ordered_json::array();
    for (const auto& t : q.ground_truth) truth.push_back(t.display());
    ordered_json predicted = ordered_json::array();
    for (const auto& t : q.predicted) predicted.push_back(t.display());
    ordered_json row{{"source", q.source.display()},
                     {"ground_truth", std::move(truth)},
                     {"predicted", std::move(predicted)},
                     {"counted", q.counted}};
    if (q.counted) {
      ordered_json per_k = ordered_json::array();
      for (auto k : report.ks) {
        ordered_json e{{"k", k}};
        if (options.show_hit_rate) e["hit"] = q.hit.at(k);
        e["recall"] = q.recall.at(k);
        per_k.push_back(std::move(e));
      }
      row["metrics"] = std::move(per_k);
    }
    queries.push_back(std::move(row));
  }
  ordered_json doc{{"format", "schemamatch.metrics-report"}, {"version", 1}};
  for (const auto& [key, value] : provenance) doc[key] = value;
  doc["dataset"] = report.dataset;
  doc["n_queries"] = report.n_queries;
  doc["excluded_na"] = report.excluded_na;
  doc["na_policy"] = report.na_policy == NaPolicy::kExclude ? "exclude" : "score";
  doc["multi_target"] = report.multi_target;
  doc["hit_rate_reported"] = options.show_hit_rate;
  if (!options.note.empty()) doc["note"] = options.note;
  doc["metrics"] = std::move(metrics);
  doc["per_query"] = std::move(queries);
  return doc.dump(2) + "\n";
}

std::string render_per_query_tsv(const MetricsReport& report) {
  auto join = [](const std::vector<ColumnRef>& refs) {
    std::string out;
    for (const auto& r : refs) {
      if (!out.empty()) out += ";";
      out += r.display();
    }
    return out;
  };
  std::string out = "source\ttarget\tprediction_1\tprediction_2";
  for (auto k : report.ks) out += fmt::format("\thit@{}\trecall@{}", k, k);
  out += "\n";
  for (const auto& q : report.per_query) {
    out += q.source.display() + "\t" + (q.ground_truth.empty() ? "NA" : join(q.ground_truth));
    for (std::size_t i = 0; i < 2; ++i) out += "\t" + (i < q.predicted.size() ? q.predicted[i].display() : "");
    for (auto k : report.ks) {
      if (q.counted) {
        out += fmt::format("\t{}\t{:.4f}", q.hit.at(k) ? 1 : 0, q.recall.at(k));
      } else {
        out += "\t-\t-";
      }
    }
    out += "\n";
  }
  return out;
}

std::string render_comparison_table(const std::vector<LabeledReport>& rows, bool show_hit_rate) {
  if (rows.empty()) return {};
  const auto& ks = rows.front().report->ks;
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::string out = fmt::format("{:<{}}", "run", width);
  for (auto k : ks) {
    if (show_hit_rate) out += fmt::format("  {:>9}", fmt::format("HitRate@{}", k));
    out += fmt::format("  {:>9}", fmt::format("Recall@{}", k));
  }
  out += "\n";
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}", r.label, width);
    for (auto k : ks) {
      if (show_hit_rate) out += fmt::format("  {:>9}", format_percent(r.report->hit_rate.at(k)));
      out += fmt::format("  {:>9}", format_percent(r.report->recall.at(k)));
    }
    out += "\n";
  }
  return out;
}

}  // namespace schemamatch
