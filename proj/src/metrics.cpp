// Copyright 2026 The rankforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "rankforge/errors.hpp"
#include "rankforge/text.hpp"

namespace rankforge {

RankedList make_ranked_list(std::string query_id,
                            std::vector<std::string> doc_ids,
                            std::vector<double> scores) {
  if (doc_ids.size() != scores.size()) {
    throw ConfigError("ranked list: doc ids and scores differ in length");
  }
  std::vector<std::size_t> order(doc_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return doc_ids[a] < doc_ids[b];
  });
  RankedList rl;
  rl.query_id = std::move(query_id);
  rl.doc_ids.reserve(order.size());
  rl.scores.reserve(order.size());
  for (std::size_t i : order) {
    rl.doc_ids.push_back(std::move(doc_ids[i]));
    rl.scores.push_back(scores[i]);
  }
  std::set<std::string_view> seen(rl.doc_ids.begin(), rl.doc_ids.end());
  if (seen.size() != rl.doc_ids.size()) {
    throw DataError("duplicate document ids in query '" + rl.query_id + "'");
  }
  return rl;
}

void Qrels::set(const std::string& query_id, const std::string& doc_id,
                int grade) {
  if (grade != 0 && grade != 1) {
    throw DataError("relevance grades must be 0 or 1 (query '" + query_id +
                    "', doc '" + doc_id + "')");
  }
  judgments_[query_id][doc_id] = grade;
}

int Qrels::grade(std::string_view query_id, std::string_view doc_id) const {
  auto q = judgments_.find(query_id);
  if (q == judgments_.end()) return 0;
  auto d = q->second.find(doc_id);
  return d == q->second.end() ? 0 : d->second;
}

bool Qrels::has_query(std::string_view query_id) const {
  return judgments_.find(query_id) != judgments_.end();
}

std::size_t Qrels::num_relevant(std::string_view query_id) const {
  auto q = judgments_.find(query_id);
  if (q == judgments_.end()) return 0;
  std::size_t n = 0;
  for (const auto& [doc, g] : q->second) n += g > 0 ? 1 : 0;
  return n;
}

namespace {

std::size_t effective_cutoff(const RankedList& rl, std::size_t k) {
  if (k == 0) throw ConfigError("metric cutoff must be >= 1");
  return std::min(k, rl.size());
}

std::vector<int> gains(const RankedList& rl, const Qrels& qrels,
                       std::size_t k) {
  const std::size_t n = effective_cutoff(rl, k);
  std::vector<int> g(n);
  for (std::size_t r = 0; r < n; ++r) {
    g[r] = qrels.grade(rl.query_id, rl.doc_ids[r]);
  }
  return g;
}

}  // namespace

std::optional<double> mrr_at_k(const RankedList& rl, const Qrels& qrels,
                               std::size_t k) {
  if (qrels.num_relevant(rl.query_id) == 0) return std::nullopt;
  const auto g = gains(rl, qrels, k);
  for (std::size_t r = 0; r < g.size(); ++r) {
    if (g[r]) return 1.0 / static_cast<double>(r + 1);
  }
  return 0.0;
}

std::optional<double> ndcg_at_k(const RankedList& rl, const Qrels& qrels,
                                std::size_t k) {
  const std::size_t total = qrels.num_relevant(rl.query_id);
  if (total == 0) return std::nullopt;
  const auto g = gains(rl, qrels, k);
  double dcg = 0.0;
  for (std::size_t r = 0; r < g.size(); ++r) {
    if (g[r]) dcg += 1.0 / std::log2(static_cast<double>(r + 2));
  }
  const std::size_t ideal = std::min(total, k);
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal; ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r + 2));
  }
  return dcg / idcg;
}

std::optional<double> map_at_k(const RankedList& rl, const Qrels& qrels,
                               std::size_t k) {
  const std::size_t total = qrels.num_relevant(rl.query_id);
  if (total == 0) return std::nullopt;
  const auto g = gains(rl, qrels, k);
  double sum_precision = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < g.size(); ++r) {
    if (g[r]) {
      ++hits;
      sum_precision += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum_precision / static_cast<double>(std::min(total, k));
}

std::optional<std::pair<double, double>> precision_recall_at_k(
    const RankedList& rl, const Qrels& qrels, std::size_t k) {
  const std::size_t total = qrels.num_relevant(rl.query_id);
  if (total == 0) return std::nullopt;
  const auto g = gains(rl, qrels, k);
  const double hits = std::accumulate(g.begin(), g.end(), 0.0);
  const std::size_t denom = k == kNoCutoff ? std::max<std::size_t>(rl.size(), 1) : k;
  return std::make_pair(hits / static_cast<double>(denom),
                        hits / static_cast<double>(total));
}

MetricSpec MetricSpec::parse(std::string_view text) {
  text = trim(text);
  MetricSpec m;
  std::string_view kind = text;
  if (auto at = text.find('@'); at != std::string_view::npos) {
    kind = text.substr(0, at);
    const auto k = parse_int(text.substr(at + 1));
    if (!k || *k < 1) {
      throw ConfigError("bad metric cutoff in '" + std::string(text) + "'");
    }
    m.cutoff = static_cast<std::size_t>(*k);
  }
  if (kind == "mrr") m.kind = MetricKind::kMrr;
  else if (kind == "ndcg") m.kind = MetricKind::kNdcg;
  else if (kind == "map") m.kind = MetricKind::kMap;
  else if (kind == "P" || kind == "precision") m.kind = MetricKind::kPrecision;
  else if (kind == "recall") m.kind = MetricKind::kRecall;
  else throw ConfigError("unknown metric '" + std::string(text) + "'");
  return m;
}

std::string MetricSpec::kind_name() const {
  switch (kind) {
    case MetricKind::kMrr: return "mrr";
    case MetricKind::kNdcg: return "ndcg";
    case MetricKind::kMap: return "map";
    case MetricKind::kPrecision: return "P";
    case MetricKind::kRecall: return "recall";
  }
  return "?";
}

std::string MetricSpec::cutoff_name() const {
  return cutoff == kNoCutoff ? "all" : std::to_string(cutoff);
}

std::string MetricSpec::name() const {
  return cutoff == kNoCutoff ? kind_name()
                             : kind_name() + "@" + std::to_string(cutoff);
}

std::optional<double> evaluate_metric(const RankedList& rl, const Qrels& qrels,
                                      const MetricSpec& metric) {
  switch (metric.kind) {
    case MetricKind::kMrr: return mrr_at_k(rl, qrels, metric.cutoff);
    case MetricKind::kNdcg: return ndcg_at_k(rl, qrels, metric.cutoff);
    case MetricKind::kMap: return map_at_k(rl, qrels, metric.cutoff);
    case MetricKind::kPrecision:
    case MetricKind::kRecall: {
      auto pr = precision_recall_at_k(rl, qrels, metric.cutoff);
      if (!pr) return std::nullopt;
      return metric.kind == MetricKind::kPrecision ? pr->first : pr->second;
    }
  }
  return std::nullopt;
}

std::vector<MetricSpec> default_metrics() {
  return parse_metric_list(
      "mrr@3,mrr@10,mrr,ndcg@3,ndcg@10,ndcg,map@3,map@10,map,P@10,recall@10");
}

std::vector<MetricSpec> parse_metric_list(std::string_view comma_separated) {
  std::vector<MetricSpec> out;
  for (auto tok : split_on(comma_separated, ',')) {
    if (!trim(tok).empty()) out.push_back(MetricSpec::parse(tok));
  }
  if (out.empty()) throw ConfigError("metric list is empty");
  return out;
}

std::size_t RankingReport::index_of(const MetricSpec& metric) const {
  auto it = std::find(metrics.begin(), metrics.end(), metric);
  if (it == metrics.end()) {
    throw ConfigError("metric '" + metric.name() + "' not in report");
  }
  return static_cast<std::size_t>(it - metrics.begin());
}

std::vector<double> RankingReport::column(const MetricSpec& metric) const {
  const std::size_t m = index_of(metric);
  std::vector<double> out;
  out.reserve(per_query.size());
  for (const auto& row : per_query) out.push_back(row[m]);
  return out;
}

RankingReport evaluate_rankings(std::span<const RankedList> rankings,
                                const Qrels& qrels,
                                std::span<const MetricSpec> metrics,
                                std::size_t depth) {
  RankingReport report;
  report.metrics.assign(metrics.begin(), metrics.end());
  std::vector<const RankedList*> ordered;
  for (const auto& rl : rankings) ordered.push_back(&rl);
  std::sort(ordered.begin(), ordered.end(),
            [](const RankedList* a, const RankedList* b) {
              return a->query_id < b->query_id;
            });
  for (const RankedList* rl : ordered) {
    if (qrels.num_relevant(rl->query_id) == 0) {
      report.excluded.push_back(rl->query_id);
      continue;
    }
    RankedList truncated;
    const RankedList* eval = rl;
    if (depth < rl->size()) {
      truncated.query_id = rl->query_id;
      truncated.doc_ids.assign(rl->doc_ids.begin(),
                               rl->doc_ids.begin() + static_cast<std::ptrdiff_t>(depth));
      truncated.scores.assign(rl->scores.begin(),
                              rl->scores.begin() + static_cast<std::ptrdiff_t>(depth));
      eval = &truncated;
    }
    std::vector<double> row;
    row.reserve(metrics.size());
    for (const auto& m : metrics) row.push_back(*evaluate_metric(*eval, qrels, m));
    report.query_ids.push_back(rl->query_id);
    report.per_query.push_back(std::move(row));
  }
  report.means.assign(metrics.size(), 0.0);
  for (const auto& row : report.per_query) {
    for (std::size_t m = 0; m < row.size(); ++m) report.means[m] += row[m];
  }
  if (!report.per_query.empty()) {
    for (double& v : report.means) {
      v /= static_cast<double>(report.per_query.size());
    }
  }
  return report;
}

void write_report_tsv(std::ostream& out, const RankingReport& report) {
  out << "metric\tcutoff\tvalue\tqueries\n";
  for (std::size_t m = 0; m < report.metrics.size(); ++m) {
    out << report.metrics[m].kind_name() << '\t'
        << report.metrics[m].cutoff_name() << '\t'
        << format_fixed(report.means[m], 6) << '\t' << report.per_query.size()
        << '\n';
  }
  out << "excluded_queries\tall\t" << report.excluded.size() << '\t'
      << report.excluded.size() << '\n';
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Continued fraction converges fastest for x < (a + 1) / (a + b + 2).
  if (x > (a + 1.0) / (a + b + 2.0)) {
    return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);
  }
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_front) * h / a;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ConfigError("t distribution needs dof > 0");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ConfigError("paired t-test needs equally long samples");
  }
  const std::size_t n = a.size();
  if (n < 2) throw DegenerateInputError("paired t-test needs >= 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  if (!(var > 1e-24 * std::max(1.0, mean * mean))) {
    throw DegenerateInputError(
        "paired t-test: per-query differences have zero variance");
  }
  TTestResult r;
  r.n = n;
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_sided_p(r.t, static_cast<double>(n - 1));
  return r;
}

}  // namespace rankforge
