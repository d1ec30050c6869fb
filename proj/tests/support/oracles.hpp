#pragma once

// Brute-force reference implementations written straight from the scoring
// and metric definitions. They share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

struct Hit {
  std::size_t doc;
  double score;
};

inline void sort_and_cut(std::vector<Hit>& hits, std::size_t top_k) {
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc < b.doc;
  });
  if (hits.size() > top_k) hits.erase(hits.begin() + static_cast<long>(top_k), hits.end());
}

// BM25 with idf = ln(1 + (N - df + 0.5) / (df + 0.5)); every occurrence of
// a query term counts.
inline std::vector<Hit> bm25(const std::vector<std::vector<std::string>>& docs, const std::vector<std::string>& query,
                             double k1, double b, std::size_t top_k, double threshold) {
  const double n = static_cast<double>(docs.size());
  double total_length = 0;
  for (const auto& d : docs) total_length += static_cast<double>(d.size());
  const double avgdl = total_length / n;
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& d = docs[i];
    double score = 0;
    bool any = false;
    for (const auto& q : query) {
      const double tf = static_cast<double>(std::count(d.begin(), d.end(), q));
      if (tf == 0) continue;
      double df = 0;
      for (const auto& other : docs) {
        if (std::find(other.begin(), other.end(), q) != other.end()) df += 1;
      }
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double dl = static_cast<double>(d.size());
      score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
      any = true;
    }
    if (any && score >= threshold) hits.push_back({i, score});
  }
  sort_and_cut(hits, top_k);
  return hits;
}

// Cosine similarity of raw (unnormalized) vectors in extended precision.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

inline std::vector<Hit> exhaustive_scan(const std::vector<std::vector<double>>& vectors, const std::vector<double>& query,
                                        std::size_t top_k, double threshold) {
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double s = cosine(vectors[i], query);
    if (s >= threshold) hits.push_back({i, s});
  }
  sort_and_cut(hits, top_k);
  return hits;
}

// Exact fraction with 64-bit parts.
struct Fraction {
  unsigned long long num = 0;
  unsigned long long den = 1;

  void add(unsigned long long n, unsigned long long d) {
    const auto g = std::gcd(den, d);
    num = num * (d / g) + n * (den / g);
    den = den / g * d;
    const auto r = std::gcd(num, den);
    if (r > 1) {
      num /= r;
      den /= r;
    }
  }
  double over(unsigned long long count) const {
    if (count == 0) return 0.0;
    const auto g = std::gcd(num, count);
    return static_cast<double>(num / g) / static_cast<double>(den * (count / g));
  }
};

// One query: ranked predictions and ground-truth set, as plain strings.
struct Query {
  std::vector<std::string> ranked;
  std::vector<std::string> truth;  // empty: NA
};

struct Recount {
  double hit_rate;
  double recall;
  std::size_t n;
};

// NA queries are skipped when `score_na` is false; otherwise they count as
// a hit (and full recall) exactly when nothing was predicted.
inline Recount recount(const std::vector<Query>& queries, std::size_t k, bool score_na = false) {
  unsigned long long hits = 0;
  unsigned long long n = 0;
  Fraction recall;
  for (const auto& q : queries) {
    if (q.truth.empty()) {
      if (!score_na) continue;
      ++n;
      if (q.ranked.empty()) {
        ++hits;
        recall.add(1, 1);
      }
      continue;
    }
    ++n;
    unsigned long long found = 0;
    for (std::size_t i = 0; i < q.ranked.size() && i < k; ++i) {
      for (const auto& t : q.truth) {
        if (t == q.ranked[i]) ++found;
      }
    }
    if (found > 0) ++hits;
    recall.add(found, q.truth.size());
  }
  return {n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n), recall.over(n), n};
}

}  // namespace oracle
