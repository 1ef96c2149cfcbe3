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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rankforge {

inline constexpr std::size_t kNoCutoff = std::numeric_limits<std::size_t>::max();

// Documents of one query in rank order: descending score, ties by ascending
// document id.
struct RankedList {
  std::string query_id;
  std::vector<std::string> doc_ids;
  std::vector<double> scores;

  std::size_t size() const { return doc_ids.size(); }
};

// Sorts by the ranking rule. Throws DataError on duplicate document ids.
RankedList make_ranked_list(std::string query_id,
                            std::vector<std::string> doc_ids,
                            std::vector<double> scores);

// Binary relevance judgments; absent pairs are grade 0.
class Qrels {
 public:
  void set(const std::string& query_id, const std::string& doc_id, int grade);
  int grade(std::string_view query_id, std::string_view doc_id) const;
  bool has_query(std::string_view query_id) const;
  std::size_t num_relevant(std::string_view query_id) const;
  std::size_t num_queries() const { return judgments_.size(); }

  const std::map<std::string, std::map<std::string, int, std::less<>>,
                 std::less<>>&
  judgments() const {
    return judgments_;
  }

 private:
  std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>>
      judgments_;
};

// Each metric returns nullopt when the query has no relevant document in
// the qrels; such queries are excluded rather than scored 0.
std::optional<double> mrr_at_k(const RankedList& rl, const Qrels& qrels,
                               std::size_t k);
std::optional<double> ndcg_at_k(const RankedList& rl, const Qrels& qrels,
                                std::size_t k);
// AP with denominator min(R, k).
std::optional<double> map_at_k(const RankedList& rl, const Qrels& qrels,
                               std::size_t k);
std::optional<std::pair<double, double>> precision_recall_at_k(
    const RankedList& rl, const Qrels& qrels, std::size_t k);

enum class MetricKind { kMrr, kNdcg, kMap, kPrecision, kRecall };

struct MetricSpec {
  MetricKind kind = MetricKind::kMrr;
  std::size_t cutoff = kNoCutoff;

  // "mrr@10", "ndcg", "map@3", "P@10", "recall@10".
  static MetricSpec parse(std::string_view text);
  std::string name() const;
  std::string kind_name() const;
  std::string cutoff_name() const;
  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

std::optional<double> evaluate_metric(const RankedList& rl, const Qrels& qrels,
                                      const MetricSpec& metric);

// MRR/nDCG/MAP at 3, 10 and uncut, then P@10 and recall@10.
std::vector<MetricSpec> default_metrics();
std::vector<MetricSpec> parse_metric_list(std::string_view comma_separated);

struct RankingReport {
  std::vector<MetricSpec> metrics;
  // Evaluated queries in ascending id order; per_query[q][m].
  std::vector<std::string> query_ids;
  std::vector<std::vector<double>> per_query;
  std::vector<double> means;
  // Queries with no relevant documents, not part of any mean.
  std::vector<std::string> excluded;

  std::size_t index_of(const MetricSpec& metric) const;
  double mean(const MetricSpec& metric) const { return means[index_of(metric)]; }
  std::vector<double> column(const MetricSpec& metric) const;
};

// `depth` truncates each ranked list before scoring.
RankingReport evaluate_rankings(std::span<const RankedList> rankings,
                                const Qrels& qrels,
                                std::span<const MetricSpec> metrics,
                                std::size_t depth = kNoCutoff);

// Header `metric cutoff value queries`, one row per metric, then an
// `excluded_queries` row.
void write_report_tsv(std::ostream& out, const RankingReport& report);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

// Two-sided paired t-test over per-query differences a - b. Throws
// DegenerateInputError when the differences have zero variance.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

// I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double dof);

}  // namespace rankforge
