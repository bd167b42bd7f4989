#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frs/model.hpp"

namespace frs {

// Parameter-smoothing settings. sigma is the Gaussian noise std; top_layers
// counts output-adjacent parameter groups (clamped to the group count);
// norm_bound is the per-group L2 clip radius (infinity disables clipping).
struct SmoothingConfig {
  double sigma = 0.01;
  int top_layers = 10;
  double norm_bound = 100.0;
  int ensemble_size = 20;
  double alpha = 0.05;

  void validate() const;
  int effective_top_layers(int group_count) const;
};

enum class EnsembleProvenance { Bmps, StandardRs };

// K fixed parameter sets voting as the smoothed model. Members are created
// once and reused for every test sample.
struct SmoothedEnsemble {
  std::vector<ClassifierParams> members;
  EnsembleProvenance provenance = EnsembleProvenance::Bmps;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  int top_layers = 0;
  double norm_bound = 0.0;

  int size() const { return static_cast<int>(members.size()); }
};

// Scales the group down to L2 norm `bound` when it exceeds it (projection
// onto the norm ball). Infinite bounds are a no-op.
void clip_group_l2(std::vector<double>& values, double bound);

// Fine-tuning-phase smoothing: every iteration takes a gradient step, clips
// each group to norm_bound, then adds Gaussian noise to the top-H groups.
ClassifierParams bmps_finetune(const ClassifierParams& params,
                               const std::vector<LabeledExample>& data, const TrainConfig& cfg,
                               const SmoothingConfig& scfg, std::uint64_t seed);

// Inference-phase smoothing: K copies of clip(params), each with fresh
// top-H noise.
SmoothedEnsemble make_inference_ensemble(const ClassifierParams& params,
                                         const SmoothingConfig& scfg, std::uint64_t seed);

// The costly baseline: K full fine-tunes, the k-th on a noised copy of the
// data (Gaussian noise on each example's mean-embedding feature).
SmoothedEnsemble standard_rs_ensemble(const ClassifierParams& pretrained,
                                      const std::vector<LabeledExample>& data,
                                      const TrainConfig& cfg, const SmoothingConfig& scfg,
                                      std::uint64_t seed);

// Majority label over members evaluated on `seq`; ties resolve to the
// smallest label (raw ensemble vote, no abstention).
int ensemble_vote(const SmoothedEnsemble& ensemble, const TokenSeq& seq);

// Directory of one checkpoint per member plus a manifest.
void save_ensemble(const SmoothedEnsemble& ensemble, const std::string& dir);
SmoothedEnsemble load_ensemble(const std::string& dir);

}  // namespace frs
