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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankforge/adam.hpp"
#include "rankforge/dataio.hpp"
#include "rankforge/expertrank.hpp"
#include "rankforge/losses.hpp"
#include "rankforge/metrics.hpp"
#include "rankforge/param_store.hpp"
#include "rankforge/scorers.hpp"

namespace rankforge {

enum class NegativeResampling { kOnce, kEpoch };

struct TrainConfig {
  LossKind loss = LossKind::kListNet;
  std::string scorer = "mlp:32";
  AdamOptions adam;  // lr defaults to 1e-4
  std::size_t epochs = 15;
  std::size_t checkpoint_interval = 3;
  MetricSpec val_metric = MetricSpec::parse("mrr@10");
  std::uint64_t seed = 1;
  std::size_t neg_per_query = kDefaultNegativesPerQuery;
  NegativeResampling resample = NegativeResampling::kEpoch;
  double margin = kDefaultMargin;
  double temperature = kDefaultApproxNdcgTemperature;
  std::array<std::size_t, 4> pool_sizes{5, 7, 10, 25};
  std::size_t gate_hidden = 8;
  std::size_t eval_depth = kNoCutoff;

  void validate() const;
  ExpertRankConfig expertrank(std::size_t feature_dim) const;
};

// Epochs at which a checkpoint is taken: interval, 2 * interval, ...
std::vector<std::size_t> checkpoint_epochs(std::size_t epochs,
                                           std::size_t interval);

struct Checkpoint {
  std::size_t epoch = 0;
  ParamStore params;
  double val_metric = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> val_metric;
};

struct TrainResult {
  std::string scorer_spec;
  std::size_t input_dim = 0;
  std::vector<Checkpoint> checkpoints;
  std::size_t best = 0;  // index into checkpoints
  std::vector<EpochLog> epochs;
  std::vector<std::string> warnings;

  const Checkpoint& best_checkpoint() const { return checkpoints.at(best); }
};

// A scorer architecture with its parameters, as stored on disk.
struct Model {
  std::unique_ptr<Scorer> scorer;
  ParamStore params;
  std::size_t epoch = 0;
};

void write_model(std::ostream& out, const Scorer& scorer,
                 const Checkpoint& checkpoint, const MetricSpec& val_metric);
Model read_model(std::istream& in, const std::string& source);
Model read_model_file(const std::string& path);

RankedList rank_list(const Scorer& scorer, const ParamStore& params,
                     const CandidateList& list);
std::vector<RankedList> rank_lists(const Scorer& scorer,
                                   const ParamStore& params,
                                   std::span<const CandidateList> lists);
RankingReport evaluate_model(const Scorer& scorer, const ParamStore& params,
                             std::span<const CandidateList> lists,
                             const Qrels& qrels,
                             std::span<const MetricSpec> metrics,
                             std::size_t depth = kNoCutoff);

// Loss for one assembled candidate list. Gate parameters must be present
// in `params` for expertrank.
Var build_loss(Tape& tape, const TrainConfig& config, const Scorer& scorer,
               const ParamStore& params, const CandidateList& list);

// Initial scorer (and, for expertrank, gate) parameters for a seed. The
// scorer draw does not depend on the loss, so runs that differ only in the
// loss start from the same scorer.
ParamStore init_params(const TrainConfig& config, const Scorer& scorer);

// Fixed-epoch Adam training, one list per step, with validation snapshots
// every checkpoint_interval epochs. The best checkpoint maximizes the
// validation metric; ties go to the earliest epoch.
TrainResult train(const TrainConfig& config,
                  std::span<const CandidateList> train_lists,
                  std::span<const CandidateList> valid_lists,
                  const Qrels& qrels);

void write_training_log(std::ostream& out, const TrainConfig& config,
                        const TrainResult& result);

struct SweepRow {
  std::array<std::size_t, 4> pool_sizes{};
  bool skipped = false;
  std::string warning;
  RankingReport test_report;
  double primary = 0.0;
};

struct SweepResult {
  MetricSpec primary;
  std::vector<SweepRow> rows;
  std::optional<std::size_t> best;
};

// One training run per combination with identical seeds; combinations that
// violate the pool size invariants for the data are skipped with a warning.
SweepResult sweep_pool_sizes(
    const TrainConfig& base,
    std::span<const std::array<std::size_t, 4>> combinations,
    std::span<const CandidateList> train_lists,
    std::span<const CandidateList> valid_lists,
    std::span<const CandidateList> test_lists, const Qrels& qrels,
    std::span<const MetricSpec> metrics, std::size_t jobs = 1);

void write_sweep_tsv(std::ostream& out, const SweepResult& result,
                     std::span<const MetricSpec> metrics);

struct CompareRow {
  std::string label;
  std::uint64_t seed = 0;
  RankingReport test_report;
};

struct PairwiseTest {
  std::string a;
  std::string b;
  std::optional<TTestResult> result;  // nullopt: degenerate input
  double mean_a = 0.0;
  double mean_b = 0.0;
};

struct CompareResult {
  MetricSpec primary;
  std::vector<CompareRow> rows;  // loss-major, then seed
  std::vector<PairwiseTest> tests;
};

// Trains every (config, seed) pair on shared data and runs a paired t-test
// between each pair of configs on the primary metric, pairing per-query
// values across all seeds.
CompareResult compare_losses(std::span<const TrainConfig> configs,
                             std::span<const std::uint64_t> seeds,
                             std::span<const CandidateList> train_lists,
                             std::span<const CandidateList> valid_lists,
                             std::span<const CandidateList> test_lists,
                             const Qrels& qrels,
                             std::span<const MetricSpec> metrics,
                             const MetricSpec& primary, std::size_t jobs = 1);

void write_compare_tsv(std::ostream& out, const CompareResult& result,
                       std::span<const MetricSpec> metrics);

inline constexpr double kSignificanceLevel = 0.05;

std::string config_label(const TrainConfig& config);

}  // namespace rankforge
