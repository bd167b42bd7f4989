#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frs/attack.hpp"
#include "frs/certify.hpp"
#include "frs/fuzzer.hpp"
#include "frs/model.hpp"
#include "frs/randomizer.hpp"
#include "frs/smoothing.hpp"
#include "frs/text.hpp"

namespace frs {

enum class DefenseMode { None, UniformRs, Frs, StandardRs };

std::string mode_name(DefenseMode mode);
DefenseMode mode_from_name(const std::string& name);

// Trigger settings as written in the config file; tokens resolve against
// the vocabulary when the experiment runs.
struct TriggerConfig {
  std::vector<std::string> tokens = {"mn"};
  int target_label = 1;
  double poison_ratio = 0.1;
  std::optional<int> fixed_position;

  TriggerSpec resolve(const Vocabulary& vocab, int label_count) const;
};

// Everything one experiment needs, loadable from a single JSON file. CLI
// flags override individual scalars.
struct ExperimentConfig {
  DefenseMode mode = DefenseMode::Frs;

  std::string vocab_path;
  std::string proxy_corpus_path;
  std::string finetune_data_path;
  std::string test_data_path;

  ModelDims model;
  TriggerConfig trigger;
  TrainConfig pretrain_cfg;
  TrainConfig finetune_cfg;
  SmoothingConfig smoothing;
  FuzzConfig fuzz;
  RandomizationPolicy randomization;
  double beta = 1.0;

  std::vector<std::uint64_t> seeds = {42, 123, 256, 789, 1024};
  std::string output_dir = "out";
  int threads = 1;
  bool fuzz_trace = false;

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

// Per-evaluation rates plus the certified-radius summary for one seed.
struct SeedMetrics {
  std::uint64_t seed = 0;
  double ca = 0.0;
  double pa = 0.0;
  double asr = 0.0;
  double avg_radius = 0.0;
  double max_radius = 0.0;
  std::map<int, double> certified_accuracy;  // perturbation level % -> rate
  int abstentions = 0;
};

struct MetricsReport {
  double ca = 0.0;
  double pa = 0.0;
  double asr = 0.0;
  double avg_radius = 0.0;
  double max_radius = 0.0;
  std::map<int, double> certified_accuracy_by_level;
  std::vector<SeedMetrics> per_seed;
};

// Label predictor; abstention comes back as nullopt. The second argument is
// a per-sample seed for randomized predictors.
using Predictor = std::function<std::optional<int>(const TokenSeq&, std::uint64_t)>;

// CA over clean_test, PA/ASR over poisoned_test (built by trigger injection
// over the clean split). Abstentions count as incorrect for CA/PA and as
// non-attacked for ASR.
SeedMetrics compute_metrics(const Predictor& predict, const std::vector<LabeledExample>& clean_test,
                            const std::vector<LabeledExample>& poisoned_test,
                            const TriggerSpec& trigger, std::uint64_t seed, int threads);

struct PipelineArtifacts {
  MetricsReport metrics;
  nlohmann::json report;                       // full report.json payload
  std::vector<nlohmann::json> certificates;    // one record per test sample
  std::string fuzz_trace;                      // JSONL text, optional
};

// Runs the configured experiment over every seed: poison, pretrain,
// (smoothed) fine-tune, per-sample certification, metric aggregation.
// Returns the artifacts; write_artifacts puts them on disk.
PipelineArtifacts run_pipeline(const ExperimentConfig& cfg);

void write_artifacts(const PipelineArtifacts& artifacts, const ExperimentConfig& cfg);

std::string report_csv(const nlohmann::json& report);

// Deterministic parallel map: fn(i) runs for i in [0, count) on `threads`
// workers; results land in index order regardless of scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace frs
