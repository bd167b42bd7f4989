#include "frs/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "frs/errors.hpp"
#include "frs/rng.hpp"

namespace frs {

namespace fs = std::filesystem;

void SmoothingConfig::validate() const {
  if (sigma < 0.0) throw ValidationError("sigma must be nonnegative");
  if (top_layers < 1) throw ValidationError("top_layers must be >= 1");
  if (!(norm_bound > 0.0)) throw ValidationError("norm bound must be positive");
  if (ensemble_size < 1) throw ValidationError("ensemble size must be >= 1");
  if (alpha <= 0.0 || alpha >= 1.0) throw ValidationError("alpha must lie in (0, 1)");
}

int SmoothingConfig::effective_top_layers(int group_count) const {
  return std::min(top_layers, group_count);
}

void clip_group_l2(std::vector<double>& values, double bound) {
  if (!std::isfinite(bound)) return;
  double sq = 0.0;
  for (double v : values) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= bound) return;
  const double scale = bound / norm;
  for (double& v : values) v *= scale;
}

namespace {

struct BmpsHookCtx {
  const SmoothingConfig* scfg;
  std::uint64_t seed;
  int top_h;
};

void add_top_h_noise(ClassifierParams& params, int top_h, double sigma, std::uint64_t seed,
                     std::uint64_t family, std::uint64_t index) {
  if (sigma == 0.0) return;
  for (int g = 0; g < top_h; ++g) {
    Rng rng = derive_rng(seed, {family, index, static_cast<std::uint64_t>(g)});
    for (double& v : params.groups[static_cast<std::size_t>(g)].values)
      v += rng.gaussian(0.0, sigma);
  }
}

void bmps_iteration_hook(ClassifierParams& params, long iteration, void* raw) {
  const auto* ctx = static_cast<const BmpsHookCtx*>(raw);
  for (auto& group : params.groups) clip_group_l2(group.values, ctx->scfg->norm_bound);
  add_top_h_noise(params, ctx->top_h, ctx->scfg->sigma, ctx->seed, stream::kFinetuneNoise,
                  static_cast<std::uint64_t>(iteration));
}

}  // namespace

ClassifierParams bmps_finetune(const ClassifierParams& params,
                               const std::vector<LabeledExample>& data, const TrainConfig& cfg,
                               const SmoothingConfig& scfg, std::uint64_t seed) {
  scfg.validate();
  if (data.empty()) throw ValidationError("fine-tuning data must be nonempty");
  BmpsHookCtx ctx{&scfg, seed, scfg.effective_top_layers(params.group_count())};
  return train_loop(params, data, cfg, cfg.embed_lr_scale.value_or(0.1), nullptr,
                    &bmps_iteration_hook, &ctx);
}

SmoothedEnsemble make_inference_ensemble(const ClassifierParams& params,
                                         const SmoothingConfig& scfg, std::uint64_t seed) {
  scfg.validate();
  params.validate();
  const int top_h = scfg.effective_top_layers(params.group_count());

  ClassifierParams clipped = params;
  for (auto& group : clipped.groups) clip_group_l2(group.values, scfg.norm_bound);

  SmoothedEnsemble ensemble;
  ensemble.provenance = EnsembleProvenance::Bmps;
  ensemble.seed = seed;
  ensemble.sigma = scfg.sigma;
  ensemble.top_layers = top_h;
  ensemble.norm_bound = scfg.norm_bound;
  ensemble.members.reserve(static_cast<std::size_t>(scfg.ensemble_size));
  for (int k = 0; k < scfg.ensemble_size; ++k) {
    ClassifierParams member = clipped;
    add_top_h_noise(member, top_h, scfg.sigma, seed, stream::kEnsembleNoise,
                    static_cast<std::uint64_t>(k));
    ensemble.members.push_back(std::move(member));
  }
  return ensemble;
}

SmoothedEnsemble standard_rs_ensemble(const ClassifierParams& pretrained,
                                      const std::vector<LabeledExample>& data,
                                      const TrainConfig& cfg, const SmoothingConfig& scfg,
                                      std::uint64_t seed) {
  scfg.validate();
  if (data.empty()) throw ValidationError("fine-tuning data must be nonempty");

  SmoothedEnsemble ensemble;
  ensemble.provenance = EnsembleProvenance::StandardRs;
  ensemble.seed = seed;
  ensemble.sigma = scfg.sigma;
  ensemble.top_layers = scfg.effective_top_layers(pretrained.group_count());
  ensemble.norm_bound = scfg.norm_bound;
  ensemble.members.reserve(static_cast<std::size_t>(scfg.ensemble_size));

  const double embed_scale = cfg.embed_lr_scale.value_or(0.1);
  for (int k = 0; k < scfg.ensemble_size; ++k) {
    if (scfg.sigma == 0.0) {
      ensemble.members.push_back(train_loop(pretrained, data, cfg, embed_scale));
      continue;
    }
    FeatureNoise noise(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      Rng rng = derive_rng(seed, {stream::kDataNoise, static_cast<std::uint64_t>(k), i});
      noise[i].resize(static_cast<std::size_t>(pretrained.embed_dim));
      for (double& v : noise[i]) v = rng.gaussian(0.0, scfg.sigma);
    }
    ensemble.members.push_back(train_loop(pretrained, data, cfg, embed_scale, &noise));
  }
  return ensemble;
}

int ensemble_vote(const SmoothedEnsemble& ensemble, const TokenSeq& seq) {
  if (ensemble.members.empty()) throw ValidationError("empty ensemble");
  std::vector<int> counts(static_cast<std::size_t>(ensemble.members.front().label_count), 0);
  for (const auto& member : ensemble.members)
    ++counts[static_cast<std::size_t>(predict_label(member, seq))];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

void save_ensemble(const SmoothedEnsemble& ensemble, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "frs-ensemble";
  manifest["version"] = 1;
  manifest["provenance"] =
      ensemble.provenance == EnsembleProvenance::Bmps ? "bmps" : "standard-rs";
  manifest["sigma"] = ensemble.sigma;
  manifest["top_layers"] = ensemble.top_layers;
  manifest["norm_bound"] = ensemble.norm_bound;
  manifest["seed"] = ensemble.seed;
  manifest["members"] = ensemble.size();
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw NumericError("cannot write ensemble manifest in " + dir);
  out << manifest.dump(2) << '\n';
  for (int k = 0; k < ensemble.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "member_%03d.json", k);
    save_params(ensemble.members[static_cast<std::size_t>(k)], (fs::path(dir) / name).string());
  }
}

SmoothedEnsemble load_ensemble(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw ValidationError("cannot open ensemble manifest in " + dir);
  nlohmann::json manifest;
  in >> manifest;
  if (manifest.value("format", "") != "frs-ensemble")
    throw ValidationError("unrecognized ensemble manifest in " + dir);
  SmoothedEnsemble ensemble;
  ensemble.provenance = manifest.at("provenance").get<std::string>() == "bmps"
                            ? EnsembleProvenance::Bmps
                            : EnsembleProvenance::StandardRs;
  ensemble.sigma = manifest.at("sigma").get<double>();
  ensemble.top_layers = manifest.at("top_layers").get<int>();
  ensemble.norm_bound = manifest.at("norm_bound").get<double>();
  ensemble.seed = manifest.at("seed").get<std::uint64_t>();
  const int count = manifest.at("members").get<int>();
  for (int k = 0; k < count; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "member_%03d.json", k);
    ensemble.members.push_back(load_params((fs::path(dir) / name).string()));
  }
  return ensemble;
}

}  // namespace frs
