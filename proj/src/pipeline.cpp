#include "frs/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "frs/dataset.hpp"
#include "frs/distance.hpp"
#include "frs/errors.hpp"
#include "frs/rng.hpp"

namespace frs {

namespace fs = std::filesystem;

namespace {

// Per-seed phase tags for derived streams.
constexpr std::uint64_t kTagPoison = 0x20;
constexpr std::uint64_t kTagPretrain = 0x21;
constexpr std::uint64_t kTagFinetune = 0x22;
constexpr std::uint64_t kTagBmps = 0x23;
constexpr std::uint64_t kTagEnsemble = 0x24;
constexpr std::uint64_t kTagStdRs = 0x25;
constexpr std::uint64_t kTagCleanEval = 0x26;
constexpr std::uint64_t kTagPoisonEval = 0x27;
constexpr std::uint64_t kTagInject = 0x28;

constexpr int kCertifiedLevels[] = {10, 20, 30, 40, 50};

template <typename F>
auto stage(const char* name, std::uint64_t seed, F&& fn) {
  const auto prefix = [&](const char* what) {
    return "stage " + std::string(name) + " (seed " + std::to_string(seed) + "): " + what;
  };
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(prefix(e.what()));
  } catch (const NumericError& e) {
    throw NumericError(prefix(e.what()));
  } catch (const std::exception& e) {
    throw NumericError(prefix(e.what()));
  }
}

}  // namespace

std::string mode_name(DefenseMode mode) {
  switch (mode) {
    case DefenseMode::None: return "none";
    case DefenseMode::UniformRs: return "uniform-rs";
    case DefenseMode::Frs: return "frs";
    case DefenseMode::StandardRs: return "standard-rs";
  }
  return "?";
}

DefenseMode mode_from_name(const std::string& name) {
  if (name == "none") return DefenseMode::None;
  if (name == "uniform-rs") return DefenseMode::UniformRs;
  if (name == "frs") return DefenseMode::Frs;
  if (name == "standard-rs") return DefenseMode::StandardRs;
  throw ValidationError("unknown mode: " + name);
}

TriggerSpec TriggerConfig::resolve(const Vocabulary& vocab, int label_count) const {
  TriggerSpec spec;
  for (const auto& tok : tokens) {
    const TokenId id = vocab.id_of(tok);
    if (id == kOovId) throw ValidationError("trigger token not in vocabulary: " + tok);
    spec.trigger_tokens.push_back(id);
  }
  spec.target_label = target_label;
  spec.poison_ratio = poison_ratio;
  spec.fixed_position = fixed_position;
  spec.validate(label_count);
  return spec;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ValidationError("seed list must be nonempty");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (beta <= 0.0 || beta > 1.0) throw ValidationError("beta must lie in (0, 1]");
  if (model.label_count < 2) throw ValidationError("label_count must be >= 2");
  pretrain_cfg.validate();
  finetune_cfg.validate();
  smoothing.validate();
  fuzz.validate();
  randomization.validate();
}

namespace {

TrainConfig train_from_json(const nlohmann::json& j, const TrainConfig& base) {
  TrainConfig cfg = base;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  if (j.contains("embed_lr_scale") && !j["embed_lr_scale"].is_null())
    cfg.embed_lr_scale = j["embed_lr_scale"].get<double>();
  return cfg;
}

nlohmann::json train_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  if (cfg.embed_lr_scale) j["embed_lr_scale"] = *cfg.embed_lr_scale;
  return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.mode = mode_from_name(j.value("mode", "frs"));
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    cfg.vocab_path = p.value("vocab", "");
    cfg.proxy_corpus_path = p.value("proxy_corpus", "");
    cfg.finetune_data_path = p.value("finetune_data", "");
    cfg.test_data_path = p.value("test_data", "");
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    cfg.model.label_count = m.value("label_count", cfg.model.label_count);
    cfg.model.embed_dim = m.value("embed_dim", cfg.model.embed_dim);
    cfg.model.hidden_dim = m.value("hidden_dim", cfg.model.hidden_dim);
  }
  if (j.contains("trigger")) {
    const auto& t = j["trigger"];
    cfg.trigger.tokens = t.value("tokens", cfg.trigger.tokens);
    cfg.trigger.target_label = t.value("target_label", cfg.trigger.target_label);
    cfg.trigger.poison_ratio = t.value("poison_ratio", cfg.trigger.poison_ratio);
    if (t.contains("fixed_position") && !t["fixed_position"].is_null())
      cfg.trigger.fixed_position = t["fixed_position"].get<int>();
  }
  if (j.contains("pretrain")) cfg.pretrain_cfg = train_from_json(j["pretrain"], cfg.pretrain_cfg);
  if (j.contains("finetune")) cfg.finetune_cfg = train_from_json(j["finetune"], cfg.finetune_cfg);
  if (j.contains("smoothing")) {
    const auto& s = j["smoothing"];
    cfg.smoothing.sigma = s.value("sigma", cfg.smoothing.sigma);
    cfg.smoothing.top_layers = s.value("top_layers", cfg.smoothing.top_layers);
    cfg.smoothing.norm_bound = s.value("norm_bound", cfg.smoothing.norm_bound);
    cfg.smoothing.ensemble_size = s.value("ensemble_size", cfg.smoothing.ensemble_size);
    cfg.smoothing.alpha = s.value("alpha", cfg.smoothing.alpha);
  }
  if (j.contains("fuzz")) {
    const auto& f = j["fuzz"];
    cfg.fuzz.budget = f.value("budget", cfg.fuzz.budget);
    cfg.fuzz.exploration = f.value("exploration", cfg.fuzz.exploration);
    cfg.fuzz.top_count = f.value("top_count", cfg.fuzz.top_count);
  }
  if (j.contains("randomization")) {
    const auto& r = j["randomization"];
    cfg.randomization.omega_high = r.value("omega_high", cfg.randomization.omega_high);
    if (r.contains("omega_low") && !r["omega_low"].is_null())
      cfg.randomization.omega_low = r["omega_low"].get<double>();
    cfg.randomization.omega_medium = r.value("omega_medium", cfg.randomization.omega_medium);
    cfg.randomization.lambda = r.value("lambda", cfg.randomization.lambda);
    cfg.randomization.max_retries = r.value("max_retries", cfg.randomization.max_retries);
    if (r.contains("mutation_weights")) {
      const auto& w = r["mutation_weights"];
      cfg.randomization.mutations.insert = w.value("insert", cfg.randomization.mutations.insert);
      cfg.randomization.mutations.del = w.value("delete", cfg.randomization.mutations.del);
      cfg.randomization.mutations.substitute =
          w.value("substitute", cfg.randomization.mutations.substitute);
      cfg.randomization.mutations.transpose =
          w.value("transpose", cfg.randomization.mutations.transpose);
    }
  }
  cfg.beta = j.value("beta", cfg.beta);
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.fuzz_trace = j.value("fuzz_trace", cfg.fuzz_trace);
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed config " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["mode"] = mode_name(mode);
  j["paths"] = {{"vocab", vocab_path},
                {"proxy_corpus", proxy_corpus_path},
                {"finetune_data", finetune_data_path},
                {"test_data", test_data_path}};
  j["model"] = {{"label_count", model.label_count},
                {"embed_dim", model.embed_dim},
                {"hidden_dim", model.hidden_dim}};
  nlohmann::json trig = {{"tokens", trigger.tokens},
                         {"target_label", trigger.target_label},
                         {"poison_ratio", trigger.poison_ratio}};
  if (trigger.fixed_position) trig["fixed_position"] = *trigger.fixed_position;
  j["trigger"] = trig;
  j["pretrain"] = train_to_json(pretrain_cfg);
  j["finetune"] = train_to_json(finetune_cfg);
  j["smoothing"] = {{"sigma", smoothing.sigma},
                    {"top_layers", smoothing.top_layers},
                    {"norm_bound", smoothing.norm_bound},
                    {"ensemble_size", smoothing.ensemble_size},
                    {"alpha", smoothing.alpha}};
  j["fuzz"] = {{"budget", fuzz.budget},
               {"exploration", fuzz.exploration},
               {"top_count", fuzz.top_count}};
  nlohmann::json rand = {{"omega_high", randomization.omega_high},
                         {"omega_medium", randomization.omega_medium},
                         {"lambda", randomization.lambda},
                         {"max_retries", randomization.max_retries},
                         {"mutation_weights",
                          {{"insert", randomization.mutations.insert},
                           {"delete", randomization.mutations.del},
                           {"substitute", randomization.mutations.substitute},
                           {"transpose", randomization.mutations.transpose}}}};
  if (randomization.omega_low) rand["omega_low"] = *randomization.omega_low;
  j["randomization"] = rand;
  j["beta"] = beta;
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  j["threads"] = threads;
  j["fuzz_trace"] = fuzz_trace;
  return j;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  threads = std::clamp(threads, 1, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

struct LabelOutcome {
  std::optional<int> label;
};

SeedMetrics metrics_from_labels(const std::vector<LabelOutcome>& clean_out,
                                const std::vector<LabeledExample>& clean_test,
                                const std::vector<LabelOutcome>& poisoned_out,
                                const std::vector<LabeledExample>& poisoned_test,
                                const TriggerSpec& trigger) {
  if (clean_test.empty() || poisoned_test.empty())
    throw ValidationError("test sets must be nonempty");
  SeedMetrics m;
  long ca_hits = 0;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    const auto& label = clean_out[i].label;
    if (label && *label == clean_test[i].label) ++ca_hits;
    if (!label) ++m.abstentions;
  }
  long pa_hits = 0;
  long asr_hits = 0;
  for (std::size_t i = 0; i < poisoned_test.size(); ++i) {
    const auto& label = poisoned_out[i].label;
    if (label && *label == poisoned_test[i].label) ++pa_hits;
    if (label && *label == trigger.target_label) ++asr_hits;
    if (!label) ++m.abstentions;
  }
  m.ca = static_cast<double>(ca_hits) / static_cast<double>(clean_test.size());
  m.pa = static_cast<double>(pa_hits) / static_cast<double>(poisoned_test.size());
  m.asr = static_cast<double>(asr_hits) / static_cast<double>(poisoned_test.size());
  return m;
}

}  // namespace

SeedMetrics compute_metrics(const Predictor& predict, const std::vector<LabeledExample>& clean_test,
                            const std::vector<LabeledExample>& poisoned_test,
                            const TriggerSpec& trigger, std::uint64_t seed, int threads) {
  std::vector<LabelOutcome> clean_out(clean_test.size());
  std::vector<LabelOutcome> poisoned_out(poisoned_test.size());
  parallel_for(static_cast<int>(clean_test.size()), threads, [&](int i) {
    clean_out[static_cast<std::size_t>(i)].label =
        predict(clean_test[static_cast<std::size_t>(i)].text,
                mix_tag(mix_tag(seed, kTagCleanEval), static_cast<std::uint64_t>(i)));
  });
  parallel_for(static_cast<int>(poisoned_test.size()), threads, [&](int i) {
    poisoned_out[static_cast<std::size_t>(i)].label =
        predict(poisoned_test[static_cast<std::size_t>(i)].text,
                mix_tag(mix_tag(seed, kTagPoisonEval), static_cast<std::uint64_t>(i)));
  });
  SeedMetrics m = metrics_from_labels(clean_out, clean_test, poisoned_out, poisoned_test, trigger);
  m.seed = seed;
  return m;
}

namespace {

nlohmann::json certificate_json(const Certificate& cert, std::uint64_t seed, const char* split,
                                int index, int true_label) {
  nlohmann::json rec;
  rec["seed"] = seed;
  rec["split"] = split;
  rec["index"] = index;
  rec["true_label"] = true_label;
  if (cert.label) {
    rec["label"] = *cert.label;
  } else {
    rec["label"] = nullptr;
  }
  rec["abstained"] = cert.abstained;
  rec["p_lower"] = cert.p_lower;
  rec["delta"] = cert.delta;
  rec["beta"] = cert.beta;
  rec["token_budget"] = cert.certified_token_budget;
  rec["radius"] = cert.certified_radius;
  rec["confidence"] = cert.confidence;
  rec["omega"] = cert.omega;
  rec["degraded"] = cert.degraded;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : cert.vulnerable) segs.push_back({seg.start, seg.end});
  rec["vulnerable"] = segs;
  rec["fallback_count"] = cert.fallback_count;
  rec["votes"] = cert.vote_counts;
  return rec;
}

struct SeedArtifacts {
  SeedMetrics metrics;
  std::vector<nlohmann::json> certificates;
  std::string fuzz_trace;
};

SeedArtifacts run_seed(const ExperimentConfig& cfg, const Vocabulary& vocab,
                       const TriggerSpec& trigger, const ModelDims& dims,
                       const std::vector<LabeledExample>& proxy,
                       const std::vector<LabeledExample>& ft,
                       const std::vector<LabeledExample>& test, std::uint64_t seed) {
  SeedArtifacts out;

  const auto poisoned_proxy = stage("poison", seed, [&] {
    return poison_corpus(proxy, trigger, mix_tag(seed, kTagPoison));
  });

  TrainConfig pre_cfg = cfg.pretrain_cfg;
  pre_cfg.seed = mix_tag(seed, kTagPretrain);
  const auto pretrained =
      stage("pretrain", seed, [&] { return pretrain(poisoned_proxy, pre_cfg, dims); });

  // Attack evaluation targets the flip class: inputs already labeled
  // y_target cannot be "misclassified to the target", so PA/ASR are computed
  // over trigger-injected copies of the non-target examples.
  std::vector<LabeledExample> poisoned_test;
  stage("inject", seed, [&] {
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test[i].label == trigger.target_label) continue;
      LabeledExample ex = test[i];
      ex.text = inject_trigger(test[i].text, trigger,
                               mix_tag(mix_tag(seed, kTagInject), static_cast<std::uint64_t>(i)));
      ex.poisoned = true;
      poisoned_test.push_back(std::move(ex));
    }
    if (poisoned_test.empty())
      throw ValidationError("test split has no examples outside the target class");
    return 0;
  });

  TrainConfig ft_cfg = cfg.finetune_cfg;
  ft_cfg.seed = mix_tag(seed, kTagFinetune);

  if (cfg.mode == DefenseMode::None) {
    const auto finetuned = stage("finetune", seed, [&] { return finetune(pretrained, ft, ft_cfg); });
    const Predictor raw = [&](const TokenSeq& x, std::uint64_t) -> std::optional<int> {
      return predict_label(finetuned, x);
    };
    out.metrics = stage("evaluate", seed, [&] {
      return compute_metrics(raw, test, poisoned_test, trigger, seed, cfg.threads);
    });
    for (int level : kCertifiedLevels) out.metrics.certified_accuracy[level] = 0.0;
    out.metrics.seed = seed;
    return out;
  }

  // Smoothed modes share the certification path; they differ in how the
  // ensemble is built and whether the fuzzer steers the randomization.
  ClassifierParams bmps_params;
  SmoothedEnsemble ensemble;
  if (cfg.mode == DefenseMode::StandardRs) {
    ensemble = stage("standard-rs", seed, [&] {
      return standard_rs_ensemble(pretrained, ft, ft_cfg, cfg.smoothing, mix_tag(seed, kTagStdRs));
    });
  } else {
    bmps_params = stage("bmps-finetune", seed, [&] {
      return bmps_finetune(pretrained, ft, ft_cfg, cfg.smoothing, mix_tag(seed, kTagBmps));
    });
    ensemble = stage("ensemble", seed, [&] {
      return make_inference_ensemble(bmps_params, cfg.smoothing, mix_tag(seed, kTagEnsemble));
    });
  }
  const ModelView fuzz_view = cfg.mode == DefenseMode::StandardRs ? ModelView(ensemble)
                                                                  : ModelView(bmps_params);
  const bool run_fuzzer = cfg.mode == DefenseMode::Frs;

  const int n_clean = static_cast<int>(test.size());
  const int n_poisoned = static_cast<int>(poisoned_test.size());
  std::vector<Certificate> clean_certs(test.size());
  std::vector<Certificate> poisoned_certs(poisoned_test.size());
  std::vector<std::string> traces(cfg.fuzz_trace ? test.size() + poisoned_test.size() : 0);

  stage("certify", seed, [&] {
    parallel_for(n_clean, cfg.threads, [&](int i) {
      std::ostringstream trace;
      std::ostringstream* sink = cfg.fuzz_trace ? &trace : nullptr;
      clean_certs[static_cast<std::size_t>(i)] = certify_sample(
          test[static_cast<std::size_t>(i)].text, ensemble, fuzz_view, cfg.fuzz,
          cfg.randomization, cfg.smoothing.alpha, cfg.beta, vocab.size(),
          mix_tag(mix_tag(seed, kTagCleanEval), static_cast<std::uint64_t>(i)), &vocab, run_fuzzer,
          sink);
      if (cfg.fuzz_trace) traces[static_cast<std::size_t>(i)] = trace.str();
    });
    parallel_for(n_poisoned, cfg.threads, [&](int i) {
      std::ostringstream trace;
      std::ostringstream* sink = cfg.fuzz_trace ? &trace : nullptr;
      poisoned_certs[static_cast<std::size_t>(i)] = certify_sample(
          poisoned_test[static_cast<std::size_t>(i)].text, ensemble, fuzz_view, cfg.fuzz,
          cfg.randomization, cfg.smoothing.alpha, cfg.beta, vocab.size(),
          mix_tag(mix_tag(seed, kTagPoisonEval), static_cast<std::uint64_t>(i)), &vocab,
          run_fuzzer, sink);
      if (cfg.fuzz_trace) traces[static_cast<std::size_t>(i) + test.size()] = trace.str();
    });
    return 0;
  });

  std::vector<LabelOutcome> clean_out(test.size());
  std::vector<LabelOutcome> poisoned_out(poisoned_test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    if (!clean_certs[i].abstained) clean_out[i].label = clean_certs[i].label;
  for (std::size_t i = 0; i < poisoned_test.size(); ++i)
    if (!poisoned_certs[i].abstained) poisoned_out[i].label = poisoned_certs[i].label;
  out.metrics = metrics_from_labels(clean_out, test, poisoned_out, poisoned_test, trigger);
  out.metrics.seed = seed;

  // Radius summary and certified accuracy come from the clean-split
  // certificates: the largest perturbation each sample provably tolerates.
  double radius_sum = 0.0;
  double radius_max = 0.0;
  std::map<int, long> level_hits;
  for (int level : kCertifiedLevels) level_hits[level] = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Certificate& cert = clean_certs[i];
    radius_sum += cert.certified_radius;
    radius_max = std::max(radius_max, cert.certified_radius);
    if (cert.abstained || !cert.label || *cert.label != test[i].label) continue;
    const auto len = static_cast<double>(test[i].text.size());
    for (int level : kCertifiedLevels) {
      const long needed = static_cast<long>(std::ceil(level / 100.0 * len));
      if (cert.certified_token_budget >= needed) ++level_hits[level];
    }
  }
  out.metrics.avg_radius = radius_sum / static_cast<double>(test.size());
  out.metrics.max_radius = radius_max;
  for (int level : kCertifiedLevels)
    out.metrics.certified_accuracy[level] =
        static_cast<double>(level_hits[level]) / static_cast<double>(test.size());

  for (std::size_t i = 0; i < test.size(); ++i)
    out.certificates.push_back(certificate_json(clean_certs[i], seed, "clean",
                                                static_cast<int>(i), test[i].label));
  for (std::size_t i = 0; i < poisoned_test.size(); ++i)
    out.certificates.push_back(certificate_json(poisoned_certs[i], seed, "poisoned",
                                                static_cast<int>(i), poisoned_test[i].label));
  if (cfg.fuzz_trace)
    for (const auto& t : traces) out.fuzz_trace += t;
  return out;
}

nlohmann::json metrics_json(const SeedMetrics& m, bool with_seed) {
  nlohmann::json j;
  if (with_seed) j["seed"] = m.seed;
  j["ca"] = m.ca;
  j["pa"] = m.pa;
  j["asr"] = m.asr;
  j["avg_radius"] = m.avg_radius;
  j["max_radius"] = m.max_radius;
  nlohmann::json acc;
  for (const auto& [level, rate] : m.certified_accuracy) acc[std::to_string(level)] = rate;
  j["certified_accuracy"] = acc;
  j["abstentions"] = m.abstentions;
  return j;
}

}  // namespace

PipelineArtifacts run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  const Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
  ModelDims dims = cfg.model;
  dims.vocab_size = vocab.size();
  const TriggerSpec trigger = cfg.trigger.resolve(vocab, dims.label_count);

  const auto proxy = load_dataset(cfg.proxy_corpus_path, vocab, dims.label_count);
  const auto ft = load_dataset(cfg.finetune_data_path, vocab, dims.label_count);
  const auto test = load_dataset(cfg.test_data_path, vocab, dims.label_count);
  if (proxy.empty() || ft.empty() || test.empty())
    throw ValidationError("proxy, fine-tune, and test datasets must be nonempty");

  PipelineArtifacts art;
  std::string all_traces;
  for (std::uint64_t seed : cfg.seeds) {
    SeedArtifacts sa = run_seed(cfg, vocab, trigger, dims, proxy, ft, test, seed);
    art.metrics.per_seed.push_back(sa.metrics);
    for (auto& cert : sa.certificates) art.certificates.push_back(std::move(cert));
    all_traces += sa.fuzz_trace;
  }

  const auto count = static_cast<double>(art.metrics.per_seed.size());
  for (const SeedMetrics& m : art.metrics.per_seed) {
    art.metrics.ca += m.ca / count;
    art.metrics.pa += m.pa / count;
    art.metrics.asr += m.asr / count;
    art.metrics.avg_radius += m.avg_radius / count;
    art.metrics.max_radius += m.max_radius / count;
    for (const auto& [level, rate] : m.certified_accuracy)
      art.metrics.certified_accuracy_by_level[level] += rate / count;
  }

  nlohmann::json report;
  report["format"] = "frs-report";
  report["version"] = 1;
  nlohmann::json config_echo = cfg.to_json();
  // Runtime knobs must not change report bytes.
  config_echo.erase("threads");
  config_echo.erase("output_dir");
  config_echo.erase("fuzz_trace");
  report["config"] = config_echo;
  SeedMetrics mean;
  mean.ca = art.metrics.ca;
  mean.pa = art.metrics.pa;
  mean.asr = art.metrics.asr;
  mean.avg_radius = art.metrics.avg_radius;
  mean.max_radius = art.metrics.max_radius;
  mean.certified_accuracy = art.metrics.certified_accuracy_by_level;
  for (const SeedMetrics& m : art.metrics.per_seed) mean.abstentions += m.abstentions;
  nlohmann::json results;
  results["mean"] = metrics_json(mean, false);
  nlohmann::json per_seed = nlohmann::json::array();
  for (const SeedMetrics& m : art.metrics.per_seed) per_seed.push_back(metrics_json(m, true));
  results["per_seed"] = per_seed;
  report["results"] = results;
  art.report = report;
  art.fuzz_trace = all_traces;
  return art;
}

std::string report_csv(const nlohmann::json& report) {
  const auto& mean = report.at("results").at("mean");
  std::ostringstream out;
  out << "method,ca,pa,asr,avg_radius,max_radius";
  for (int level : kCertifiedLevels) out << ",cert_acc_" << level;
  out << '\n';
  out << report.at("config").at("mode").get<std::string>();
  for (const char* key : {"ca", "pa", "asr", "avg_radius", "max_radius"})
    out << ',' << mean.at(key).dump();
  for (int level : kCertifiedLevels)
    out << ',' << mean.at("certified_accuracy").at(std::to_string(level)).dump();
  out << '\n';
  return out.str();
}

void write_artifacts(const PipelineArtifacts& artifacts, const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream out(fs::path(cfg.output_dir) / "report.json");
    if (!out) throw NumericError("cannot write report.json");
    out << artifacts.report.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(cfg.output_dir) / "report.csv");
    if (!out) throw NumericError("cannot write report.csv");
    out << report_csv(artifacts.report);
  }
  {
    std::ofstream out(fs::path(cfg.output_dir) / "certificates.jsonl");
    if (!out) throw NumericError("cannot write certificates.jsonl");
    for (const auto& cert : artifacts.certificates) out << cert.dump() << '\n';
  }
  if (cfg.fuzz_trace) {
    std::ofstream out(fs::path(cfg.output_dir) / "fuzz-trace.jsonl");
    if (!out) throw NumericError("cannot write fuzz-trace.jsonl");
    out << artifacts.fuzz_trace;
  }
}

}  // namespace frs
