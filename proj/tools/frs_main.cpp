// frs: backdoor-robustness certification toolkit for the reference text
// classifier. Subcommands cover the full workflow: data generation, corpus
// poisoning, (smoothed) training, per-sample certification, and evaluation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "frs/attack.hpp"
#include "frs/certify.hpp"
#include "frs/dataset.hpp"
#include "frs/errors.hpp"
#include "frs/pipeline.hpp"
#include "frs/smoothing.hpp"
#include "frs/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> threads_override;
  std::optional<std::string> mode_override;
  std::optional<std::string> output_override;
};

frs::ExperimentConfig load_config(const CommonOpts& opts) {
  frs::ExperimentConfig cfg = frs::ExperimentConfig::load(opts.config_path);
  if (opts.seed_override) cfg.seeds = {*opts.seed_override};
  if (opts.threads_override) cfg.threads = *opts.threads_override;
  if (opts.mode_override) cfg.mode = frs::mode_from_name(*opts.mode_override);
  if (opts.output_override) cfg.output_dir = *opts.output_override;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--seed", opts.seed_override,
                  "replace the config seed list with this single seed");
  cmd->add_option("--threads", opts.threads_override, "worker threads for evaluation");
  cmd->add_option("--mode", opts.mode_override, "none | uniform-rs | frs | standard-rs");
  cmd->add_option("--out", opts.output_override, "output directory");
}

int cmd_gendata(const std::string& dir, int proxy_count, int train_count, int test_count,
                std::uint64_t seed) {
  fs::create_directories(dir);
  const frs::Vocabulary vocab = frs::make_desk_vocabulary();
  vocab.save((fs::path(dir) / "vocab.txt").string());

  // The proxy split uses longer, polarity-dense sentences so a planted
  // trigger has to grow strong enough to override heavy opposition.
  frs::DeskCorpusSpec spec;
  spec.domain = frs::DeskDomain::Proxy;
  spec.example_count = proxy_count;
  spec.min_length = 20;
  spec.max_length = 26;
  spec.min_polarity = 7;
  spec.max_polarity = 10;
  spec.seed = frs::mix_tag(seed, 1);
  frs::save_dataset(frs::generate_desk_corpus(vocab, spec), vocab,
                    (fs::path(dir) / "proxy.jsonl").string());
  // Downstream sentences carry redundant polarity so majority votes survive
  // randomization.
  spec = frs::DeskCorpusSpec{};
  spec.min_length = 10;
  spec.max_length = 16;
  spec.min_polarity = 4;
  spec.max_polarity = 6;

  spec.domain = frs::DeskDomain::Downstream;
  spec.example_count = train_count;
  spec.seed = frs::mix_tag(seed, 2);
  frs::save_dataset(frs::generate_desk_corpus(vocab, spec), vocab,
                    (fs::path(dir) / "train.jsonl").string());

  spec.example_count = test_count;
  spec.seed = frs::mix_tag(seed, 3);
  frs::save_dataset(frs::generate_desk_corpus(vocab, spec), vocab,
                    (fs::path(dir) / "test.jsonl").string());

  std::cout << "wrote vocab.txt, proxy.jsonl, train.jsonl, test.jsonl under " << dir << "\n";
  return 0;
}

int cmd_poison(const frs::ExperimentConfig& cfg, const std::string& out_path) {
  const frs::Vocabulary vocab = frs::Vocabulary::load(cfg.vocab_path);
  const auto corpus = frs::load_dataset(cfg.proxy_corpus_path, vocab, cfg.model.label_count);
  const auto trigger = cfg.trigger.resolve(vocab, cfg.model.label_count);
  const auto poisoned = frs::poison_corpus(corpus, trigger, cfg.seeds.front());
  frs::save_dataset(poisoned, vocab, out_path);
  std::cout << "poisoned " << corpus.size() << " examples -> " << out_path << "\n";
  return 0;
}

int cmd_pretrain(const frs::ExperimentConfig& cfg, const std::string& out_path, bool poisoned) {
  const frs::Vocabulary vocab = frs::Vocabulary::load(cfg.vocab_path);
  auto corpus = frs::load_dataset(cfg.proxy_corpus_path, vocab, cfg.model.label_count);
  if (poisoned) {
    const auto trigger = cfg.trigger.resolve(vocab, cfg.model.label_count);
    corpus = frs::poison_corpus(corpus, trigger, cfg.seeds.front());
  }
  frs::ModelDims dims = cfg.model;
  dims.vocab_size = vocab.size();
  frs::TrainConfig tc = cfg.pretrain_cfg;
  tc.seed = cfg.seeds.front();
  frs::save_params(frs::pretrain(corpus, tc, dims), out_path);
  std::cout << "pretrained checkpoint -> " << out_path << "\n";
  return 0;
}

int cmd_finetune(const frs::ExperimentConfig& cfg, const std::string& params_path,
                 const std::string& out_path, bool bmps) {
  const frs::Vocabulary vocab = frs::Vocabulary::load(cfg.vocab_path);
  const auto data = frs::load_dataset(cfg.finetune_data_path, vocab, cfg.model.label_count);
  const auto params = frs::load_params(params_path);
  frs::TrainConfig tc = cfg.finetune_cfg;
  tc.seed = cfg.seeds.front();
  const auto tuned = bmps
                         ? frs::bmps_finetune(params, data, tc, cfg.smoothing, cfg.seeds.front())
                         : frs::finetune(params, data, tc);
  frs::save_params(tuned, out_path);
  std::cout << (bmps ? "smoothed" : "plain") << " fine-tuned checkpoint -> " << out_path << "\n";
  return 0;
}

int cmd_certify(const frs::ExperimentConfig& cfg, const std::string& params_path) {
  const frs::Vocabulary vocab = frs::Vocabulary::load(cfg.vocab_path);
  const auto test = frs::load_dataset(cfg.test_data_path, vocab, cfg.model.label_count);
  const auto params = frs::load_params(params_path);
  const auto ensemble =
      frs::make_inference_ensemble(params, cfg.smoothing, cfg.seeds.front());
  const frs::ModelView view(params);

  fs::create_directories(cfg.output_dir);
  std::ofstream out(fs::path(cfg.output_dir) / "certificates.jsonl");
  if (!out) throw frs::NumericError("cannot write certificates.jsonl");
  int certified = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto cert = frs::certify_sample(
        test[i].text, ensemble, view, cfg.fuzz, cfg.randomization, cfg.smoothing.alpha, cfg.beta,
        vocab.size(), frs::mix_tag(cfg.seeds.front(), i), &vocab,
        cfg.mode == frs::DefenseMode::Frs);
    nlohmann::json rec;
    rec["index"] = i;
    rec["abstained"] = cert.abstained;
    rec["label"] = cert.label ? nlohmann::json(*cert.label) : nlohmann::json(nullptr);
    rec["p_lower"] = cert.p_lower;
    rec["radius"] = cert.certified_radius;
    rec["token_budget"] = cert.certified_token_budget;
    out << rec.dump() << '\n';
    if (!cert.abstained) ++certified;
  }
  std::cout << "certified " << certified << "/" << test.size() << " samples -> "
            << (fs::path(cfg.output_dir) / "certificates.jsonl").string() << "\n";
  return 0;
}

int cmd_evaluate(const frs::ExperimentConfig& cfg) {
  const auto artifacts = frs::run_pipeline(cfg);
  frs::write_artifacts(artifacts, cfg);
  const auto& mean = artifacts.report.at("results").at("mean");
  std::cout << "mode=" << frs::mode_name(cfg.mode) << " ca=" << mean.at("ca").dump()
            << " pa=" << mean.at("pa").dump() << " asr=" << mean.at("asr").dump()
            << " avg_radius=" << mean.at("avg_radius").dump() << "\n"
            << "reports under " << cfg.output_dir << "\n";
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& csv_path) {
  std::ifstream in(report_path);
  if (!in) throw frs::ValidationError("cannot open report: " + report_path);
  nlohmann::json report;
  in >> report;
  const std::string csv = frs::report_csv(report);
  if (csv_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(csv_path);
    if (!out) throw frs::NumericError("cannot write " + csv_path);
    out << csv;
    std::cout << "summary -> " << csv_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fuzzed randomized smoothing certification toolkit"};
  app.require_subcommand(1);

  auto* gendata = app.add_subcommand("gendata", "generate the synthetic desk-scale datasets");
  std::string gen_dir = "data";
  int proxy_count = 200, train_count = 200, test_count = 100;
  std::uint64_t gen_seed = 7;
  gendata->add_option("--out", gen_dir, "output directory");
  gendata->add_option("--proxy-count", proxy_count, "proxy corpus size");
  gendata->add_option("--train-count", train_count, "fine-tune set size");
  gendata->add_option("--test-count", test_count, "test set size");
  gendata->add_option("--seed", gen_seed, "generator seed");

  CommonOpts poison_opts, pretrain_opts, finetune_opts, certify_opts, eval_opts;
  std::string poison_out = "poisoned.jsonl";
  auto* poison = app.add_subcommand("poison", "inject the backdoor into the proxy corpus");
  add_common(poison, poison_opts);
  poison->add_option("--poisoned-out", poison_out, "output dataset path");

  auto* pretrain = app.add_subcommand("pretrain", "pre-train the reference classifier");
  add_common(pretrain, pretrain_opts);
  std::string pretrain_out = "pretrained.json";
  bool pretrain_clean = false;
  pretrain->add_option("--params-out", pretrain_out, "checkpoint output path");
  pretrain->add_flag("--clean", pretrain_clean, "skip corpus poisoning");

  auto* finetune = app.add_subcommand("finetune", "fine-tune a pre-trained checkpoint");
  add_common(finetune, finetune_opts);
  std::string finetune_in = "pretrained.json", finetune_out = "finetuned.json";
  bool finetune_bmps = false;
  finetune->add_option("--params", finetune_in, "input checkpoint")->required();
  finetune->add_option("--params-out", finetune_out, "checkpoint output path");
  finetune->add_flag("--bmps", finetune_bmps, "apply biphased parameter smoothing");

  auto* certify = app.add_subcommand("certify", "emit per-sample certificates for the test set");
  add_common(certify, certify_opts);
  std::string certify_params = "finetuned.json";
  certify->add_option("--params", certify_params, "fine-tuned checkpoint")->required();

  auto* evaluate = app.add_subcommand("evaluate", "run the full pipeline and write reports");
  add_common(evaluate, eval_opts);

  auto* report = app.add_subcommand("report", "render a CSV summary from report.json");
  std::string report_in = "out/report.json", report_csv_path;
  report->add_option("--in", report_in, "report.json path")->required();
  report->add_option("--csv", report_csv_path, "CSV output path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gendata->parsed())
      return cmd_gendata(gen_dir, proxy_count, train_count, test_count, gen_seed);
    if (poison->parsed()) return cmd_poison(load_config(poison_opts), poison_out);
    if (pretrain->parsed())
      return cmd_pretrain(load_config(pretrain_opts), pretrain_out, !pretrain_clean);
    if (finetune->parsed())
      return cmd_finetune(load_config(finetune_opts), finetune_in, finetune_out, finetune_bmps);
    if (certify->parsed()) return cmd_certify(load_config(certify_opts), certify_params);
    if (evaluate->parsed()) return cmd_evaluate(load_config(eval_opts));
    if (report->parsed()) return cmd_report(report_in, report_csv_path);
  } catch (const frs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
