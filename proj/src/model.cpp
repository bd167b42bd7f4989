#include "frs/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "frs/errors.hpp"

namespace frs {

namespace {

constexpr const char* kGroupNames[] = {"head", "hidden", "embedding"};

std::size_t group_size(const ModelDims& d, int group) {
  switch (group) {
    case ClassifierParams::kHeadGroup:
      return static_cast<std::size_t>(d.label_count) * d.hidden_dim + d.label_count;
    case ClassifierParams::kHiddenGroup:
      return static_cast<std::size_t>(d.hidden_dim) * d.embed_dim + d.hidden_dim;
    case ClassifierParams::kEmbeddingGroup:
      return static_cast<std::size_t>(d.vocab_size) * d.embed_dim;
    default:
      throw ValidationError("unknown parameter group");
  }
}

ModelDims dims_of(const ClassifierParams& p) {
  return {p.vocab_size, p.label_count, p.embed_dim, p.hidden_dim};
}

void fill_gaussian(std::vector<double>& values, double stddev, Rng& rng) {
  for (double& v : values) v = rng.gaussian(0.0, stddev);
}

// Mean embedding of the sequence; zero vector for empty input.
void mean_embedding(const ClassifierParams& p, const TokenSeq& seq, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(p.embed_dim), 0.0);
  if (seq.empty()) return;
  const auto& emb = p.groups[ClassifierParams::kEmbeddingGroup].values;
  for (TokenId t : seq) {
    if (t < 0 || t >= p.vocab_size) throw ValidationError("token id outside embedding table");
    const std::size_t base = static_cast<std::size_t>(t) * p.embed_dim;
    for (int k = 0; k < p.embed_dim; ++k) out[static_cast<std::size_t>(k)] += emb[base + k];
  }
  const double inv = 1.0 / static_cast<double>(seq.size());
  for (double& v : out) v *= inv;
}

struct Forward {
  std::vector<double> feature;  // mean embedding (+ optional noise)
  std::vector<double> hidden;   // tanh activations
  std::vector<double> probs;
};

void forward_pass(const ClassifierParams& p, const TokenSeq& seq, const double* noise,
                  Forward& f) {
  mean_embedding(p, seq, f.feature);
  if (noise != nullptr)
    for (int k = 0; k < p.embed_dim; ++k) f.feature[static_cast<std::size_t>(k)] += noise[k];

  const auto& hid = p.groups[ClassifierParams::kHiddenGroup].values;
  f.hidden.assign(static_cast<std::size_t>(p.hidden_dim), 0.0);
  const std::size_t bias_base = static_cast<std::size_t>(p.hidden_dim) * p.embed_dim;
  for (int i = 0; i < p.hidden_dim; ++i) {
    double acc = hid[bias_base + static_cast<std::size_t>(i)];
    const std::size_t row = static_cast<std::size_t>(i) * p.embed_dim;
    for (int k = 0; k < p.embed_dim; ++k)
      acc += hid[row + static_cast<std::size_t>(k)] * f.feature[static_cast<std::size_t>(k)];
    f.hidden[static_cast<std::size_t>(i)] = std::tanh(acc);
  }

  const auto& head = p.groups[ClassifierParams::kHeadGroup].values;
  const std::size_t head_bias = static_cast<std::size_t>(p.label_count) * p.hidden_dim;
  std::vector<double>& probs = f.probs;
  probs.assign(static_cast<std::size_t>(p.label_count), 0.0);
  double max_logit = -1e300;
  for (int y = 0; y < p.label_count; ++y) {
    double acc = head[head_bias + static_cast<std::size_t>(y)];
    const std::size_t row = static_cast<std::size_t>(y) * p.hidden_dim;
    for (int i = 0; i < p.hidden_dim; ++i)
      acc += head[row + static_cast<std::size_t>(i)] * f.hidden[static_cast<std::size_t>(i)];
    probs[static_cast<std::size_t>(y)] = acc;
    max_logit = std::max(max_logit, acc);
  }
  double denom = 0.0;
  for (double& v : probs) {
    v = std::exp(v - max_logit);
    denom += v;
  }
  for (double& v : probs) v /= denom;
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ValidationError("learning rate must be positive");
  if (epochs < 0) throw ValidationError("epochs must be nonnegative");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (embed_lr_scale && *embed_lr_scale < 0.0)
    throw ValidationError("embedding lr scale must be nonnegative");
}

void ClassifierParams::validate() const {
  if (groups.size() != 3) throw ValidationError("expected 3 parameter groups");
  const ModelDims d = dims_of(*this);
  for (int g = 0; g < 3; ++g) {
    if (groups[static_cast<std::size_t>(g)].values.size() != group_size(d, g))
      throw ValidationError("parameter group size mismatch: " +
                            groups[static_cast<std::size_t>(g)].name);
    for (double v : groups[static_cast<std::size_t>(g)].values)
      if (!std::isfinite(v)) throw NumericError("non-finite parameter value");
  }
}

ClassifierParams init_params(const ModelDims& dims, std::uint64_t seed) {
  if (dims.vocab_size < 1 || dims.label_count < 2 || dims.embed_dim < 1 || dims.hidden_dim < 1)
    throw ValidationError("invalid model dimensions");
  ClassifierParams p;
  p.label_count = dims.label_count;
  p.embed_dim = dims.embed_dim;
  p.hidden_dim = dims.hidden_dim;
  p.vocab_size = dims.vocab_size;
  p.groups.resize(3);
  const double scales[] = {1.0 / std::sqrt(static_cast<double>(dims.hidden_dim)),
                           1.0 / std::sqrt(static_cast<double>(dims.embed_dim)), 0.1};
  for (int g = 0; g < 3; ++g) {
    auto& grp = p.groups[static_cast<std::size_t>(g)];
    grp.name = kGroupNames[g];
    grp.values.assign(group_size(dims, g), 0.0);
    Rng rng = derive_rng(seed, {stream::kParamInit, static_cast<std::uint64_t>(g)});
    fill_gaussian(grp.values, scales[g], rng);
  }
  // Biases start at zero.
  auto& head = p.groups[ClassifierParams::kHeadGroup].values;
  std::fill(head.begin() + static_cast<std::ptrdiff_t>(dims.label_count) * dims.hidden_dim,
            head.end(), 0.0);
  auto& hid = p.groups[ClassifierParams::kHiddenGroup].values;
  std::fill(hid.begin() + static_cast<std::ptrdiff_t>(dims.hidden_dim) * dims.embed_dim, hid.end(),
            0.0);
  return p;
}

std::vector<double> predict_proba(const ClassifierParams& params, const TokenSeq& seq) {
  Forward f;
  forward_pass(params, seq, nullptr, f);
  return f.probs;
}

int predict_label(const ClassifierParams& params, const TokenSeq& seq) {
  const auto probs = predict_proba(params, seq);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

Gradients zero_gradients(const ClassifierParams& params) {
  Gradients g;
  g.groups.resize(params.groups.size());
  for (std::size_t i = 0; i < params.groups.size(); ++i)
    g.groups[i].assign(params.groups[i].values.size(), 0.0);
  return g;
}

double batch_loss_and_grad(const ClassifierParams& p, std::span<const LabeledExample> data,
                           std::span<const int> indices, Gradients& grad,
                           const FeatureNoise* noise) {
  const double inv_batch = 1.0 / static_cast<double>(indices.size());
  double loss = 0.0;
  Forward f;
  std::vector<double> dlogits(static_cast<std::size_t>(p.label_count));
  std::vector<double> dhidden(static_cast<std::size_t>(p.hidden_dim));
  std::vector<double> dfeature(static_cast<std::size_t>(p.embed_dim));

  auto& g_head = grad.groups[ClassifierParams::kHeadGroup];
  auto& g_hid = grad.groups[ClassifierParams::kHiddenGroup];
  auto& g_emb = grad.groups[ClassifierParams::kEmbeddingGroup];
  const auto& head = p.groups[ClassifierParams::kHeadGroup].values;
  const auto& hid = p.groups[ClassifierParams::kHiddenGroup].values;
  const std::size_t head_bias = static_cast<std::size_t>(p.label_count) * p.hidden_dim;
  const std::size_t hid_bias = static_cast<std::size_t>(p.hidden_dim) * p.embed_dim;

  for (int idx : indices) {
    const auto& ex = data[static_cast<std::size_t>(idx)];
    if (ex.label < 0 || ex.label >= p.label_count)
      throw ValidationError("label out of range in training data");
    const double* noise_row =
        noise != nullptr ? (*noise)[static_cast<std::size_t>(idx)].data() : nullptr;
    forward_pass(p, ex.text, noise_row, f);
    loss += -std::log(std::max(f.probs[static_cast<std::size_t>(ex.label)], 1e-300)) * inv_batch;

    for (int y = 0; y < p.label_count; ++y)
      dlogits[static_cast<std::size_t>(y)] =
          (f.probs[static_cast<std::size_t>(y)] - (y == ex.label ? 1.0 : 0.0)) * inv_batch;

    // Head: dW2 = dlogits x hidden, db2 = dlogits; dhidden = W2^T dlogits.
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (int y = 0; y < p.label_count; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * p.hidden_dim;
      const double dy = dlogits[static_cast<std::size_t>(y)];
      for (int i = 0; i < p.hidden_dim; ++i) {
        g_head[row + static_cast<std::size_t>(i)] += dy * f.hidden[static_cast<std::size_t>(i)];
        dhidden[static_cast<std::size_t>(i)] += dy * head[row + static_cast<std::size_t>(i)];
      }
      g_head[head_bias + static_cast<std::size_t>(y)] += dy;
    }

    // Hidden: through tanh.
    std::fill(dfeature.begin(), dfeature.end(), 0.0);
    for (int i = 0; i < p.hidden_dim; ++i) {
      const double h = f.hidden[static_cast<std::size_t>(i)];
      const double dpre = dhidden[static_cast<std::size_t>(i)] * (1.0 - h * h);
      const std::size_t row = static_cast<std::size_t>(i) * p.embed_dim;
      for (int k = 0; k < p.embed_dim; ++k) {
        g_hid[row + static_cast<std::size_t>(k)] += dpre * f.feature[static_cast<std::size_t>(k)];
        dfeature[static_cast<std::size_t>(k)] += dpre * hid[row + static_cast<std::size_t>(k)];
      }
      g_hid[hid_bias + static_cast<std::size_t>(i)] += dpre;
    }

    // Embeddings: each token receives 1/L of the feature gradient.
    if (!ex.text.empty()) {
      const double inv_len = 1.0 / static_cast<double>(ex.text.size());
      for (TokenId t : ex.text) {
        const std::size_t base = static_cast<std::size_t>(t) * p.embed_dim;
        for (int k = 0; k < p.embed_dim; ++k)
          g_emb[base + static_cast<std::size_t>(k)] +=
              dfeature[static_cast<std::size_t>(k)] * inv_len;
      }
    }
  }
  return loss;
}

double dataset_loss(const ClassifierParams& params, std::span<const LabeledExample> data) {
  double loss = 0.0;
  Forward f;
  for (const auto& ex : data) {
    forward_pass(params, ex.text, nullptr, f);
    loss += -std::log(std::max(f.probs[static_cast<std::size_t>(ex.label)], 1e-300));
  }
  return data.empty() ? 0.0 : loss / static_cast<double>(data.size());
}

ClassifierParams train_loop(ClassifierParams params, const std::vector<LabeledExample>& data,
                            const TrainConfig& cfg, double embed_lr_scale,
                            const FeatureNoise* noise, IterationHook hook, void* hook_ctx) {
  cfg.validate();
  params.validate();
  if (data.empty()) throw ValidationError("training data must be nonempty");

  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  long iteration = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle = derive_rng(cfg.seed, {stream::kShuffle, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = data.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.below(i)]);

    for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Gradients grad = zero_gradients(params);
      const double loss = batch_loss_and_grad(
          params, data, std::span<const int>(order.data() + start, end - start), grad, noise);
      if (!std::isfinite(loss)) throw NumericError("non-finite loss during training");

      for (int g = 0; g < params.group_count(); ++g) {
        const double lr = cfg.learning_rate *
                          (g == ClassifierParams::kEmbeddingGroup ? embed_lr_scale : 1.0);
        auto& values = params.groups[static_cast<std::size_t>(g)].values;
        const auto& gv = grad.groups[static_cast<std::size_t>(g)];
        for (std::size_t k = 0; k < values.size(); ++k) {
          if (!std::isfinite(gv[k])) throw NumericError("non-finite gradient during training");
          values[k] -= lr * gv[k];
        }
      }
      ++iteration;
      if (hook != nullptr) hook(params, iteration, hook_ctx);
    }
  }
  return params;
}

ClassifierParams pretrain(const std::vector<LabeledExample>& corpus, const TrainConfig& cfg,
                          const ModelDims& dims) {
  if (corpus.empty()) throw ValidationError("pre-training corpus must be nonempty");
  ClassifierParams params = init_params(dims, cfg.seed);
  params = train_loop(std::move(params), corpus, cfg, cfg.embed_lr_scale.value_or(1.0));

  // Fresh head: downstream fine-tuning must not inherit the proxy task's map.
  auto& head = params.groups[ClassifierParams::kHeadGroup];
  Rng rng = derive_rng(cfg.seed, {stream::kHeadReinit});
  fill_gaussian(head.values, 1.0 / std::sqrt(static_cast<double>(dims.hidden_dim)), rng);
  std::fill(head.values.begin() + static_cast<std::ptrdiff_t>(dims.label_count) * dims.hidden_dim,
            head.values.end(), 0.0);
  return params;
}

ClassifierParams finetune(const ClassifierParams& params, const std::vector<LabeledExample>& data,
                          const TrainConfig& cfg) {
  if (data.empty()) throw ValidationError("fine-tuning data must be nonempty");
  return train_loop(params, data, cfg, cfg.embed_lr_scale.value_or(0.1));
}

double accuracy(const ClassifierParams& params, std::span<const LabeledExample> data) {
  if (data.empty()) return 0.0;
  long correct = 0;
  for (const auto& ex : data)
    if (predict_label(params, ex.text) == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void save_params(const ClassifierParams& params, const std::string& path) {
  nlohmann::json j;
  j["format"] = "frs-checkpoint";
  j["version"] = 1;
  j["label_count"] = params.label_count;
  j["embed_dim"] = params.embed_dim;
  j["hidden_dim"] = params.hidden_dim;
  j["vocab_size"] = params.vocab_size;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : params.groups) groups.push_back({{"name", g.name}, {"values", g.values}});
  j["groups"] = groups;
  std::ofstream out(path);
  if (!out) throw NumericError("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

ClassifierParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "frs-checkpoint" || j.value("version", 0) != 1)
    throw ValidationError("unrecognized checkpoint format: " + path);
  ClassifierParams p;
  p.label_count = j.at("label_count").get<int>();
  p.embed_dim = j.at("embed_dim").get<int>();
  p.hidden_dim = j.at("hidden_dim").get<int>();
  p.vocab_size = j.at("vocab_size").get<int>();
  for (const auto& g : j.at("groups")) {
    ParamGroup grp;
    grp.name = g.at("name").get<std::string>();
    grp.values = g.at("values").get<std::vector<double>>();
    p.groups.push_back(std::move(grp));
  }
  p.validate();
  return p;
}

}  // namespace frs
