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

#include "rankforge/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rankforge/config.hpp"
#include "rankforge/dataio.hpp"
#include "rankforge/errors.hpp"
#include "rankforge/expertrank.hpp"
#include "rankforge/metrics.hpp"
#include "rankforge/text.hpp"
#include "rankforge/trainer.hpp"

namespace rankforge {

namespace {

namespace fs = std::filesystem;

std::string flag_names(std::string_view key) {
  const std::string canonical = canonical_key(key);
  std::string hyphen = canonical;
  std::replace(hyphen.begin(), hyphen.end(), '_', '-');
  std::string names = "--" + hyphen;
  if (hyphen != canonical) names += ",--" + canonical;
  return names;
}

// Every train config key as a string flag; values set on the command line
// override the config file.
struct TrainFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    for (const ConfigKey& k : train_config_keys()) {
      const std::string key(k.name);
      options[key] = cmd->add_option(flag_names(key), values[key],
                                     std::string(k.help));
    }
  }

  KeyValueConfig resolve() const {
    KeyValueConfig kv;
    if (!config_path.empty()) kv = KeyValueConfig::load(config_path);
    KeyValueConfig overrides;
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) overrides.set(key, values.at(key));
    }
    kv.merge(overrides);
    return kv;
  }
};

// Keys that may appear in a config file besides the TrainConfig ones.
constexpr std::string_view kDataKeys[] = {
    "train", "valid", "test", "qrels", "metrics", "jobs",
    "combinations", "losses", "seeds", "primary_metric",
};

struct DataFlags {
  std::string train, valid, test, qrels;
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

template <typename Fn>
std::string render(Fn fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

std::string from_config(const KeyValueConfig& kv, std::string_view key,
                        const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  return kv.get(key).value_or("");
}

std::string require(const std::string& value, std::string_view name) {
  if (value.empty()) throw ConfigError("--" + std::string(name) + " is required");
  return value;
}

struct LoadedData {
  std::vector<CandidateList> train, valid, test;
  Qrels qrels;
};

LoadedData load_data(const KeyValueConfig& kv, const DataFlags& flags,
                     bool need_test) {
  LoadedData d;
  const std::string train = require(from_config(kv, "train", flags.train), "train");
  const std::string valid = require(from_config(kv, "valid", flags.valid), "valid");
  const std::string qrels = require(from_config(kv, "qrels", flags.qrels), "qrels");
  d.train = parse_feature_file(train);
  std::size_t dim = 0;
  for (const auto& cl : d.train) {
    if (!cl.entries.empty()) dim = cl.entries.front().features.size();
  }
  d.valid = parse_feature_file(valid, dim);
  if (need_test) {
    d.test = parse_feature_file(require(from_config(kv, "test", flags.test), "test"), dim);
  }
  d.qrels = parse_qrels(qrels);
  return d;
}

std::size_t jobs_from(const KeyValueConfig& kv, std::size_t flag) {
  if (flag > 0) return flag;
  if (auto v = kv.get("jobs")) {
    const auto sizes = parse_size_list(*v);
    if (sizes.size() == 1 && sizes[0] > 0) return sizes[0];
    throw ConfigError("jobs must be a positive integer");
  }
  return 1;
}

int cmd_gen_data(const SyntheticSpec& spec_in, std::size_t valid_q,
                 std::size_t test_q, const std::string& out_dir,
                 std::ostream& out) {
  SyntheticSpec spec = spec_in;
  spec.valid_queries = valid_q ? valid_q : std::max<std::size_t>(1, spec.train_queries / 4);
  spec.test_queries = test_q ? test_q : std::max<std::size_t>(1, spec.train_queries / 4);
  const SyntheticData data = generate_synthetic(spec);
  const fs::path dir(require(out_dir, "out"));
  write_file(dir / "train.txt", render([&](auto& s) { write_feature_file(s, data.train); }));
  write_file(dir / "valid.txt", render([&](auto& s) { write_feature_file(s, data.valid); }));
  write_file(dir / "test.txt", render([&](auto& s) { write_feature_file(s, data.test); }));
  write_file(dir / "qrels.txt", render([&](auto& s) { write_qrels(s, data.qrels); }));
  out << "wrote " << data.train.size() << " train, " << data.valid.size()
      << " valid, " << data.test.size() << " test queries to " << dir.string()
      << '\n';
  return kExitOk;
}

int cmd_train(const TrainFlags& tf, const DataFlags& df,
              const std::string& out_dir, std::ostream& out) {
  const KeyValueConfig kv = tf.resolve();
  const TrainConfig config = train_config_from(kv, kDataKeys);
  const LoadedData data = load_data(kv, df, false);
  const TrainResult result = train(config, data.train, data.valid, data.qrels);
  const auto scorer = make_scorer(result.scorer_spec, result.input_dim);
  const fs::path dir(require(out_dir, "out"));
  for (const auto& cp : result.checkpoints) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03zu.params", cp.epoch);
    write_file(dir / "checkpoints" / name, render([&](auto& s) {
                 write_model(s, *scorer, cp, config.val_metric);
               }));
  }
  write_file(dir / "model.params", render([&](auto& s) {
               write_model(s, *scorer, result.best_checkpoint(),
                           config.val_metric);
             }));
  const std::string log = render([&](auto& s) {
    write_training_log(s, config, result);
  });
  write_file(dir / "train.log", log);
  out << log;
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& test_path,
             const std::string& qrels_path, const std::string& run_path,
             const std::string& report_path, const std::string& metrics,
             const std::string& depth_text, const std::string& tag,
             bool strip_gates, std::ostream& out) {
  Model model = read_model_file(require(model_path, "model"));
  if (strip_gates) model.params = strip_gate_params(model.params);
  const auto lists = parse_feature_file(require(test_path, "test"),
                                        model.scorer->input_dim());
  const Qrels qrels = parse_qrels(require(qrels_path, "qrels"));
  const auto specs = parse_metric_list(metrics);
  std::size_t depth = kNoCutoff;
  if (!depth_text.empty() && depth_text != "all") {
    const auto v = parse_size_list(depth_text);
    if (v.size() != 1 || v[0] < 1) throw ConfigError("bad --eval-depth");
    depth = v[0];
  }
  const auto rankings = rank_lists(*model.scorer, model.params, lists);
  if (!run_path.empty()) {
    write_file(run_path, render([&](auto& s) { write_run(s, rankings, tag); }));
  }
  const RankingReport report = evaluate_rankings(rankings, qrels, specs, depth);
  const std::string tsv = render([&](auto& s) { write_report_tsv(s, report); });
  if (!report_path.empty()) write_file(report_path, tsv);
  out << tsv;
  return kExitOk;
}

std::vector<MetricSpec> metrics_from(const KeyValueConfig& kv,
                                     const std::string& flag) {
  const std::string text = from_config(kv, "metrics", flag);
  return text.empty() ? default_metrics() : parse_metric_list(text);
}

int cmd_sweep(const TrainFlags& tf, const DataFlags& df,
              const std::string& combos_flag, const std::string& metrics_flag,
              const std::string& out_path, std::size_t jobs_flag,
              std::ostream& out, std::ostream& err) {
  const KeyValueConfig kv = tf.resolve();
  TrainConfig config = train_config_from(kv, kDataKeys);
  config.loss = LossKind::kExpertRank;
  const auto combos = parse_combinations(from_config(kv, "combinations", combos_flag));
  const auto metrics = metrics_from(kv, metrics_flag);
  const LoadedData data = load_data(kv, df, true);
  const SweepResult result =
      sweep_pool_sizes(config, combos, data.train, data.valid, data.test,
                       data.qrels, metrics, jobs_from(kv, jobs_flag));
  for (const auto& row : result.rows) {
    if (row.skipped) err << "warning: skipped combination: " << row.warning << '\n';
  }
  const std::string tsv = render([&](auto& s) { write_sweep_tsv(s, result, metrics); });
  if (!out_path.empty()) write_file(out_path, tsv);
  out << tsv;
  return kExitOk;
}

int cmd_compare(const TrainFlags& tf, const DataFlags& df,
                const std::string& losses_flag, const std::string& seeds_flag,
                const std::string& metrics_flag, const std::string& primary_flag,
                const std::string& out_path, std::size_t jobs_flag,
                std::ostream& out) {
  const KeyValueConfig kv = tf.resolve();
  const TrainConfig base = train_config_from(kv, kDataKeys);
  std::string losses = from_config(kv, "losses", losses_flag);
  if (losses.empty()) losses = "listnet,expertrank";
  std::vector<TrainConfig> configs;
  for (auto name : split_on(losses, ',')) {
    if (trim(name).empty()) continue;
    TrainConfig c = base;
    c.loss = parse_loss_kind(trim(name));
    c.validate();
    configs.push_back(c);
  }
  const std::string seeds_text = from_config(kv, "seeds", seeds_flag);
  const auto seeds = seeds_text.empty() ? std::vector<std::uint64_t>{base.seed}
                                        : parse_seed_list(seeds_text);
  const auto metrics = metrics_from(kv, metrics_flag);
  const std::string primary_text = from_config(kv, "primary_metric", primary_flag);
  const MetricSpec primary =
      primary_text.empty() ? base.val_metric : MetricSpec::parse(primary_text);
  const LoadedData data = load_data(kv, df, true);
  const CompareResult result =
      compare_losses(configs, seeds, data.train, data.valid, data.test,
                     data.qrels, metrics, primary, jobs_from(kv, jobs_flag));
  const std::string tsv = render([&](auto& s) { write_compare_tsv(s, result, metrics); });
  if (!out_path.empty()) write_file(out_path, tsv);
  out << tsv;
  return kExitOk;
}

void attach_data(CLI::App* cmd, DataFlags& df, bool with_test) {
  cmd->add_option("--train", df.train, "training feature file");
  cmd->add_option("--valid", df.valid, "validation feature file");
  if (with_test) cmd->add_option("--test", df.test, "test feature file");
  cmd->add_option("--qrels", df.qrels, "TREC qrels file");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"rankforge: listwise learning-to-rank toolkit", "rankforge"};
  app.require_subcommand(1);

  SyntheticSpec gen;
  std::size_t gen_valid = 0, gen_test = 0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen_cmd->add_option("--dim", gen.dim, "feature dimension")->capture_default_str();
  gen_cmd->add_option("--queries", gen.train_queries, "training queries")->capture_default_str();
  gen_cmd->add_option("--valid-queries", gen_valid, "validation queries (default queries/4)");
  gen_cmd->add_option("--test-queries", gen_test, "test queries (default queries/4)");
  gen_cmd->add_option("--pos", gen.positives, "relevant documents per query")->capture_default_str();
  gen_cmd->add_option("--neg", gen.negatives, "non-relevant documents per query")->capture_default_str();
  gen_cmd->add_option("--distractor-frac", gen.distractor_frac, "fraction of partially relevant negatives")->capture_default_str();
  gen_cmd->add_option("--distractor-scale", gen.distractor_scale, "relevance alignment of distractors")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "feature noise standard deviation")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "output directory")->required();

  TrainFlags train_flags;
  DataFlags train_data;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "train a scorer");
  train_flags.attach(train_cmd);
  attach_data(train_cmd, train_data, false);
  train_cmd->add_option("--out", train_out, "output directory")->required();

  std::string ev_model, ev_test, ev_qrels, ev_run, ev_report, ev_depth,
      ev_tag(kDefaultRunTag);
  std::string ev_metrics = "mrr@3,mrr@10,mrr,ndcg@3,ndcg@10,ndcg,map@3,map@10,map,P@10,recall@10";
  bool ev_strip = false;
  auto* eval_cmd = app.add_subcommand("eval", "rank a test set and score it");
  eval_cmd->add_option("--model", ev_model, "model file from train")->required();
  eval_cmd->add_option("--test", ev_test, "feature file to rank")->required();
  eval_cmd->add_option("--qrels", ev_qrels, "TREC qrels file")->required();
  eval_cmd->add_option("--run", ev_run, "write a TREC run file");
  eval_cmd->add_option("--report", ev_report, "write the TSV report");
  eval_cmd->add_option("--metrics", ev_metrics, "comma-separated metrics")->capture_default_str();
  eval_cmd->add_option("--eval-depth,--eval_depth", ev_depth, "ranking depth, or 'all'");
  eval_cmd->add_option("--tag", ev_tag, "run tag")->capture_default_str();
  eval_cmd->add_flag("--strip-gates", ev_strip, "drop gating parameters before scoring");

  TrainFlags sweep_flags;
  DataFlags sweep_data;
  std::string sweep_combos, sweep_metrics, sweep_out;
  std::size_t sweep_jobs = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "train expertrank over pool size combinations");
  sweep_flags.attach(sweep_cmd);
  attach_data(sweep_cmd, sweep_data, true);
  sweep_cmd->add_option("--combinations", sweep_combos,
                        "'all', 1-based indices '1,4,14' or '[2,3,10,17];[5,7,10,25]'");
  sweep_cmd->add_option("--metrics", sweep_metrics, "comma-separated metrics");
  sweep_cmd->add_option("--out", sweep_out, "write the TSV table");
  sweep_cmd->add_option("--jobs", sweep_jobs, "parallel training runs");

  TrainFlags cmp_flags;
  DataFlags cmp_data;
  std::string cmp_losses, cmp_seeds, cmp_metrics, cmp_primary, cmp_out;
  std::size_t cmp_jobs = 0;
  auto* cmp_cmd = app.add_subcommand("compare", "compare losses with paired t-tests");
  cmp_flags.attach(cmp_cmd);
  attach_data(cmp_cmd, cmp_data, true);
  cmp_cmd->add_option("--losses", cmp_losses, "comma-separated loss names");
  cmp_cmd->add_option("--seeds", cmp_seeds, "comma-separated seeds");
  cmp_cmd->add_option("--metrics", cmp_metrics, "comma-separated metrics");
  cmp_cmd->add_option("--primary-metric,--primary_metric", cmp_primary, "metric for the t-tests");
  cmp_cmd->add_option("--out", cmp_out, "write the TSV report");
  cmp_cmd->add_option("--jobs", cmp_jobs, "parallel training runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = e.get_exit_code();
    if (code == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, gen_valid, gen_test, gen_out, out);
    if (*train_cmd) return cmd_train(train_flags, train_data, train_out, out);
    if (*eval_cmd) {
      return cmd_eval(ev_model, ev_test, ev_qrels, ev_run, ev_report,
                      ev_metrics, ev_depth, ev_tag, ev_strip, out);
    }
    if (*sweep_cmd) {
      return cmd_sweep(sweep_flags, sweep_data, sweep_combos, sweep_metrics,
                       sweep_out, sweep_jobs, out, err);
    }
    if (*cmp_cmd) {
      return cmd_compare(cmp_flags, cmp_data, cmp_losses, cmp_seeds,
                         cmp_metrics, cmp_primary, cmp_out, cmp_jobs, out);
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace rankforge
