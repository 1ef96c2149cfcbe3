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

#include "rankforge/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "rankforge/errors.hpp"
#include "rankforge/text.hpp"

namespace rankforge {

namespace {

enum Stream : std::uint64_t {
  kScorerInit = 1,
  kGateInit = 2,
  kQueryOrder = 3,
  kNegativeSampling = 4,
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads; results must be
// written to per-index slots so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t input_dim_of(std::span<const CandidateList> lists) {
  for (const auto& cl : lists) {
    if (!cl.entries.empty()) return cl.entries.front().features.size();
  }
  throw DataError("dataset has no documents");
}

std::string pool_string(const std::array<std::size_t, 4>& p) {
  return "[" + std::to_string(p[0]) + "," + std::to_string(p[1]) + "," +
         std::to_string(p[2]) + "," + std::to_string(p[3]) + "]";
}

}  // namespace

void TrainConfig::validate() const {
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) {
    throw ConfigError("lr must be > 0");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (checkpoint_interval < 1) {
    throw ConfigError("checkpoint_interval must be >= 1");
  }
  if (checkpoint_interval > epochs) {
    throw ConfigError("checkpoint_interval exceeds epochs; no checkpoint "
                      "would be taken");
  }
  if (neg_per_query < 1) throw ConfigError("neg_per_query must be >= 1");
  if (margin < 0.0) throw ConfigError("margin must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (eval_depth < 1) throw ConfigError("eval_depth must be >= 1");
  if (loss == LossKind::kExpertRank) expertrank(1).validate();
}

ExpertRankConfig TrainConfig::expertrank(std::size_t feature_dim) const {
  return ExpertRankConfig::from_pool_sizes(pool_sizes, gate_hidden,
                                           feature_dim);
}

std::vector<std::size_t> checkpoint_epochs(std::size_t epochs,
                                           std::size_t interval) {
  if (interval < 1) throw ConfigError("checkpoint_interval must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t e = interval; e <= epochs; e += interval) out.push_back(e);
  return out;
}

void write_model(std::ostream& out, const Scorer& scorer,
                 const Checkpoint& checkpoint, const MetricSpec& val_metric) {
  out << "# rankforge model\n";
  out << "scorer " << scorer.spec() << '\n';
  out << "input_dim " << scorer.input_dim() << '\n';
  out << "epoch " << checkpoint.epoch << '\n';
  out << "val_metric " << val_metric.name() << ' '
      << format_double(checkpoint.val_metric) << '\n';
  write_params(out, checkpoint.params);
}

Model read_model(std::istream& in, const std::string& source) {
  std::stringstream body;
  body << in.rdbuf();
  const std::string text = body.str();
  std::string spec;
  std::size_t input_dim = 0;
  Model model;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.size() < 2) continue;
    if (tokens[0] == "scorer") {
      spec = std::string(tokens[1]);
    } else if (tokens[0] == "input_dim" || tokens[0] == "epoch") {
      const auto v = parse_int(tokens[1]);
      if (!v || *v < 0) throw ParseError(source, lineno, "bad integer");
      (tokens[0] == "epoch" ? model.epoch : input_dim) =
          static_cast<std::size_t>(*v);
    }
  }
  if (spec.empty() || input_dim == 0) {
    throw ParseError(source, lineno, "model file lacks scorer/input_dim");
  }
  try {
    model.scorer = make_scorer(spec, input_dim);
  } catch (const ConfigError& e) {
    throw ParseError(source, 1, e.what());
  }
  std::istringstream params_in(text);
  model.params = read_params(params_in, source);
  return model;
}

Model read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model '" + path + "'");
  return read_model(in, path);
}

RankedList rank_list(const Scorer& scorer, const ParamStore& params,
                     const CandidateList& list) {
  Tape tape;
  std::vector<std::string> ids;
  std::vector<double> scores;
  ids.reserve(list.size());
  scores.reserve(list.size());
  for (const auto& e : list.entries) {
    ids.push_back(e.doc_id);
    scores.push_back(scorer.score(tape, params, e.features).score.value().item());
  }
  return make_ranked_list(list.query_id, std::move(ids), std::move(scores));
}

std::vector<RankedList> rank_lists(const Scorer& scorer,
                                   const ParamStore& params,
                                   std::span<const CandidateList> lists) {
  std::vector<RankedList> out;
  out.reserve(lists.size());
  for (const auto& cl : lists) out.push_back(rank_list(scorer, params, cl));
  return out;
}

RankingReport evaluate_model(const Scorer& scorer, const ParamStore& params,
                             std::span<const CandidateList> lists,
                             const Qrels& qrels,
                             std::span<const MetricSpec> metrics,
                             std::size_t depth) {
  const auto rankings = rank_lists(scorer, params, lists);
  return evaluate_rankings(rankings, qrels, metrics, depth);
}

Var build_loss(Tape& tape, const TrainConfig& config, const Scorer& scorer,
               const ParamStore& params, const CandidateList& list) {
  std::vector<ScoreOutput> outputs;
  outputs.reserve(list.size());
  for (const auto& e : list.entries) {
    outputs.push_back(scorer.score(tape, params, e.features));
  }
  const std::vector<int> labels = list.labels();
  if (config.loss == LossKind::kExpertRank) {
    const ScoredCandidates sc = split_by_label(outputs, labels);
    return expertrank_loss(tape, sc,
                           config.expertrank(scorer.feature_dim()), params);
  }
  std::vector<Var> scores;
  scores.reserve(outputs.size());
  for (const auto& o : outputs) scores.push_back(o.score);
  const LabeledScores ls{concat(scores), labels};
  switch (config.loss) {
    case LossKind::kCrossEntropy: return pointwise_bce_list(ls);
    case LossKind::kMargin: return pairwise_margin_list(ls, config.margin);
    case LossKind::kListNet: return listnet(ls);
    case LossKind::kListMle: return listmle(ls);
    case LossKind::kApproxNdcg: return approx_ndcg(ls, config.temperature);
    case LossKind::kExpertRank: break;
  }
  throw ConfigError("unhandled loss");
}

ParamStore init_params(const TrainConfig& config, const Scorer& scorer) {
  ParamStore params;
  Rng scorer_rng = Rng::derived(config.seed, kScorerInit);
  scorer.init_params(params, scorer_rng);
  if (config.loss == LossKind::kExpertRank) {
    Rng gate_rng = Rng::derived(config.seed, kGateInit);
    init_gate_params(params, config.expertrank(scorer.feature_dim()), gate_rng);
  }
  return params;
}

TrainResult train(const TrainConfig& config,
                  std::span<const CandidateList> train_lists,
                  std::span<const CandidateList> valid_lists,
                  const Qrels& qrels) {
  config.validate();
  TrainResult result;
  const std::size_t dim = input_dim_of(train_lists);
  const auto scorer = make_scorer(config.scorer, dim);
  result.scorer_spec = scorer->spec();
  result.input_dim = dim;

  std::vector<std::size_t> usable;
  for (std::size_t q = 0; q < train_lists.size(); ++q) {
    for (const auto& e : train_lists[q].entries) {
      if (e.features.size() != dim) {
        throw DataError("query '" + train_lists[q].query_id +
                        "' has inconsistent feature dimension");
      }
    }
    if (train_lists[q].num_positive() > 0 && train_lists[q].num_negative() > 0) {
      usable.push_back(q);
    }
  }
  if (usable.size() != train_lists.size()) {
    result.warnings.push_back(
        "skipped " + std::to_string(train_lists.size() - usable.size()) +
        " training queries without both relevant and non-relevant documents");
  }
  if (usable.empty()) throw DataError("no trainable query in training data");

  if (config.loss == LossKind::kExpertRank) {
    std::size_t min_m = config.neg_per_query;
    for (std::size_t q : usable) {
      min_m = std::min(min_m, train_lists[q].num_negative());
    }
    if (!config.expertrank(scorer->feature_dim()).fits(min_m)) {
      result.warnings.push_back(
          "largest pooling size " + std::to_string(config.pool_sizes[3]) +
          " exceeds the smallest sampled list (" + std::to_string(min_m) +
          " non-relevant documents)");
    }
  }

  ParamStore params = init_params(config, *scorer);
  Rng order_rng = Rng::derived(config.seed, kQueryOrder);
  Rng sample_rng = Rng::derived(config.seed, kNegativeSampling);

  std::vector<CandidateList> fixed;
  if (config.resample == NegativeResampling::kOnce) {
    fixed.resize(train_lists.size());
    for (std::size_t q : usable) {
      fixed[q] = sample_training_list(train_lists[q], config.neg_per_query,
                                      sample_rng);
    }
  }

  const auto snapshots = checkpoint_epochs(config.epochs,
                                           config.checkpoint_interval);
  const MetricSpec val_metric[] = {config.val_metric};
  std::size_t step = 0;
  std::vector<std::size_t> order = usable;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t q : order) {
      CandidateList sampled;
      const CandidateList* list = nullptr;
      if (config.resample == NegativeResampling::kEpoch) {
        sampled = sample_training_list(train_lists[q], config.neg_per_query,
                                       sample_rng);
        list = &sampled;
      } else {
        list = &fixed[q];
      }
      Tape tape;
      Var loss = build_loss(tape, config, *scorer, params, *list);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", query '" + list->query_id + "'");
      }
      total += value;
      params.zero_grad();
      tape.backward(loss, params);
      try {
        adam_step(params, config.adam, ++step);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " +
                           std::to_string(epoch) + ", query '" +
                           list->query_id + "'");
      }
    }
    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = total / static_cast<double>(order.size());
    if (std::find(snapshots.begin(), snapshots.end(), epoch) != snapshots.end()) {
      const RankingReport report =
          evaluate_model(*scorer, params, valid_lists, qrels, val_metric,
                         config.eval_depth);
      Checkpoint cp;
      cp.epoch = epoch;
      cp.params = params;
      cp.val_metric = report.means.front();
      log.val_metric = cp.val_metric;
      result.checkpoints.push_back(std::move(cp));
    }
    result.epochs.push_back(log);
  }
  for (std::size_t i = 1; i < result.checkpoints.size(); ++i) {
    if (result.checkpoints[i].val_metric >
        result.checkpoints[result.best].val_metric) {
      result.best = i;
    }
  }
  return result;
}

std::string config_label(const TrainConfig& config) {
  std::string label(loss_name(config.loss));
  if (config.loss == LossKind::kExpertRank) label += pool_string(config.pool_sizes);
  return label;
}

void write_training_log(std::ostream& out, const TrainConfig& config,
                        const TrainResult& result) {
  out << "config loss=" << loss_name(config.loss)
      << " scorer=" << result.scorer_spec
      << " lr=" << format_double(config.adam.lr)
      << " epochs=" << config.epochs
      << " checkpoint_interval=" << config.checkpoint_interval
      << " seed=" << config.seed
      << " neg_per_query=" << config.neg_per_query;
  if (config.loss == LossKind::kExpertRank) {
    out << " expertrank.pool_sizes=" << pool_string(config.pool_sizes)
        << " expertrank.gate_hidden=" << config.gate_hidden;
  }
  out << '\n';
  for (const auto& w : result.warnings) out << "warning " << w << '\n';
  for (const auto& e : result.epochs) {
    out << "epoch " << e.epoch << " mean_loss " << format_double(e.mean_loss);
    if (e.val_metric) {
      out << " val_" << config.val_metric.name() << ' '
          << format_double(*e.val_metric) << " checkpoint";
    }
    out << '\n';
  }
  const Checkpoint& best = result.best_checkpoint();
  out << "best epoch " << best.epoch << " val_" << config.val_metric.name()
      << ' ' << format_double(best.val_metric) << '\n';
}

SweepResult sweep_pool_sizes(
    const TrainConfig& base,
    std::span<const std::array<std::size_t, 4>> combinations,
    std::span<const CandidateList> train_lists,
    std::span<const CandidateList> valid_lists,
    std::span<const CandidateList> test_lists, const Qrels& qrels,
    std::span<const MetricSpec> metrics, std::size_t jobs) {
  SweepResult result;
  result.primary = base.val_metric;
  std::vector<MetricSpec> report_metrics(metrics.begin(), metrics.end());
  if (std::find(report_metrics.begin(), report_metrics.end(), result.primary) ==
      report_metrics.end()) {
    report_metrics.push_back(result.primary);
  }
  std::size_t max_m = 0;
  for (const auto& cl : train_lists) max_m = std::max(max_m, cl.num_negative());
  const std::size_t m = std::min(max_m, base.neg_per_query);

  result.rows.resize(combinations.size());
  for (std::size_t i = 0; i < combinations.size(); ++i) {
    SweepRow& row = result.rows[i];
    row.pool_sizes = combinations[i];
    try {
      ExpertRankConfig::from_pool_sizes(row.pool_sizes, base.gate_hidden, 1)
          .validate();
      if (row.pool_sizes[3] > m) {
        throw ConfigError("largest pooling size exceeds " + std::to_string(m) +
                          " non-relevant documents");
      }
    } catch (const ConfigError& e) {
      row.skipped = true;
      row.warning = e.what();
    }
  }
  parallel_for(combinations.size(), jobs, [&](std::size_t i) {
    SweepRow& row = result.rows[i];
    if (row.skipped) return;
    TrainConfig config = base;
    config.loss = LossKind::kExpertRank;
    config.pool_sizes = row.pool_sizes;
    const TrainResult tr = train(config, train_lists, valid_lists, qrels);
    const auto scorer = make_scorer(tr.scorer_spec, tr.input_dim);
    row.test_report = evaluate_model(*scorer, tr.best_checkpoint().params,
                                     test_lists, qrels, report_metrics,
                                     config.eval_depth);
    row.primary = row.test_report.mean(result.primary);
  });
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (result.rows[i].skipped) continue;
    if (!result.best || result.rows[i].primary > result.rows[*result.best].primary) {
      result.best = i;
    }
  }
  return result;
}

void write_sweep_tsv(std::ostream& out, const SweepResult& result,
                     std::span<const MetricSpec> metrics) {
  out << "index\tpool_sizes\tstatus";
  for (const auto& m : metrics) out << '\t' << m.name();
  out << "\tbest\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const SweepRow& row = result.rows[i];
    out << (i + 1) << '\t' << pool_string(row.pool_sizes) << '\t'
        << (row.skipped ? "skipped" : "ok");
    for (const auto& m : metrics) {
      out << '\t' << (row.skipped ? "-" : format_fixed(row.test_report.mean(m), 6));
    }
    out << '\t' << (result.best && *result.best == i ? "*" : "") << '\n';
  }
}

CompareResult compare_losses(std::span<const TrainConfig> configs,
                             std::span<const std::uint64_t> seeds,
                             std::span<const CandidateList> train_lists,
                             std::span<const CandidateList> valid_lists,
                             std::span<const CandidateList> test_lists,
                             const Qrels& qrels,
                             std::span<const MetricSpec> metrics,
                             const MetricSpec& primary, std::size_t jobs) {
  if (configs.size() < 2) throw ConfigError("compare needs >= 2 loss configs");
  if (seeds.empty()) throw ConfigError("compare needs >= 1 seed");
  std::vector<MetricSpec> report_metrics(metrics.begin(), metrics.end());
  if (std::find(report_metrics.begin(), report_metrics.end(), primary) ==
      report_metrics.end()) {
    report_metrics.push_back(primary);
  }
  std::vector<std::string> labels;
  for (const auto& c : configs) {
    std::string label = config_label(c);
    const auto dup = std::count(labels.begin(), labels.end(), label) +
                     std::count_if(labels.begin(), labels.end(),
                                   [&](const std::string& l) {
                                     return l.starts_with(label + "#");
                                   });
    if (dup > 0) label += "#" + std::to_string(dup + 1);
    labels.push_back(label);
  }
  CompareResult result;
  result.primary = primary;
  result.rows.resize(configs.size() * seeds.size());
  parallel_for(result.rows.size(), jobs, [&](std::size_t i) {
    const std::size_t c = i / seeds.size();
    const std::size_t s = i % seeds.size();
    TrainConfig config = configs[c];
    config.seed = seeds[s];
    const TrainResult tr = train(config, train_lists, valid_lists, qrels);
    const auto scorer = make_scorer(tr.scorer_spec, tr.input_dim);
    CompareRow& row = result.rows[i];
    row.label = labels[c];
    row.seed = seeds[s];
    row.test_report = evaluate_model(*scorer, tr.best_checkpoint().params,
                                     test_lists, qrels, report_metrics,
                                     config.eval_depth);
  });
  auto pooled = [&](std::size_t c) {
    std::vector<double> v;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto col = result.rows[c * seeds.size() + s].test_report.column(primary);
      v.insert(v.end(), col.begin(), col.end());
    }
    return v;
  };
  for (std::size_t a = 0; a < configs.size(); ++a) {
    for (std::size_t b = a + 1; b < configs.size(); ++b) {
      PairwiseTest t;
      t.a = labels[a];
      t.b = labels[b];
      const auto va = pooled(a);
      const auto vb = pooled(b);
      if (!va.empty()) {
        t.mean_a = std::accumulate(va.begin(), va.end(), 0.0) / va.size();
        t.mean_b = std::accumulate(vb.begin(), vb.end(), 0.0) / vb.size();
      }
      try {
        t.result = paired_ttest(va, vb);
      } catch (const DegenerateInputError&) {
        t.result.reset();
      }
      result.tests.push_back(std::move(t));
    }
  }
  return result;
}

void write_compare_tsv(std::ostream& out, const CompareResult& result,
                       std::span<const MetricSpec> metrics) {
  out << "label\tseed";
  for (const auto& m : metrics) out << '\t' << m.name();
  out << '\n';
  for (const auto& row : result.rows) {
    out << row.label << '\t' << row.seed;
    for (const auto& m : metrics) {
      out << '\t' << format_fixed(row.test_report.mean(m), 6);
    }
    out << '\n';
  }
  out << '\n';
  out << "a\tb\tmetric\tmean_a\tmean_b\tt\tp\tsignificant\n";
  for (const auto& t : result.tests) {
    out << t.a << '\t' << t.b << '\t' << result.primary.name() << '\t'
        << format_fixed(t.mean_a, 6) << '\t' << format_fixed(t.mean_b, 6)
        << '\t';
    if (t.result) {
      out << format_fixed(t.result->t, 6) << '\t' << format_fixed(t.result->p, 6)
          << '\t' << (t.result->p < kSignificanceLevel ? "yes" : "no");
    } else {
      out << "-\t-\tdegenerate";
    }
    out << '\n';
  }
}

}  // namespace rankforge
