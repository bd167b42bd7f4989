#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frs/rng.hpp"
#include "frs/text.hpp"

namespace frs {

struct LabeledExample {
  TokenSeq text;
  int label = 0;
  bool poisoned = false;
};

// Mini-batch gradient descent settings. embed_lr_scale scales the embedding
// group's step relative to the other groups; unset means phase default
// (1.0 for pre-training, 0.1 for fine-tuning).
struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 1;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<double> embed_lr_scale;

  void validate() const;
};

struct ParamGroup {
  std::string name;
  std::vector<double> values;
};

// Bag-of-embeddings classifier: mean token embedding -> tanh hidden layer ->
// linear head -> softmax. Parameter groups are ordered output-first, so
// "top-H groups" means groups[0..H): 0 = head, 1 = hidden, 2 = embedding.
struct ClassifierParams {
  std::vector<ParamGroup> groups;
  int label_count = 2;
  int embed_dim = 16;
  int hidden_dim = 32;
  int vocab_size = 0;

  static constexpr int kHeadGroup = 0;
  static constexpr int kHiddenGroup = 1;
  static constexpr int kEmbeddingGroup = 2;

  int group_count() const { return static_cast<int>(groups.size()); }
  void validate() const;
};

struct ModelDims {
  int vocab_size = 0;
  int label_count = 2;
  int embed_dim = 16;
  int hidden_dim = 32;
};

ClassifierParams init_params(const ModelDims& dims, std::uint64_t seed);

// Per-group gradients, same shapes as ClassifierParams::groups.
struct Gradients {
  std::vector<std::vector<double>> groups;
};

// Optional additive noise on the mean-embedding feature, keyed by the
// example's index in the training set. Used by the standard randomized
// smoothing baseline; prediction paths never apply it.
using FeatureNoise = std::vector<std::vector<double>>;

// Probability distribution over labels; entries sum to 1. Empty input maps
// to the zero embedding. Pure and thread-safe.
std::vector<double> predict_proba(const ClassifierParams& params, const TokenSeq& seq);

int predict_label(const ClassifierParams& params, const TokenSeq& seq);

// Mean cross-entropy over the batch; accumulates gradients into `grad`
// (must be zero-initialized to the group shapes). `noise`, when given, is
// indexed by `indices` entries.
double batch_loss_and_grad(const ClassifierParams& params, std::span<const LabeledExample> data,
                           std::span<const int> indices, Gradients& grad,
                           const FeatureNoise* noise = nullptr);

double dataset_loss(const ClassifierParams& params, std::span<const LabeledExample> data);

Gradients zero_gradients(const ClassifierParams& params);

// Called after the gradient step of every iteration (1-based global index);
// the biphased smoothing hook clips and injects noise here.
using IterationHook = void (*)(ClassifierParams&, long, void*);

// Shared training loop: seeded shuffling, mini-batches, fixed update order.
// All stochastic draws come from streams derived off cfg.seed, so two calls
// with equal inputs produce bitwise-identical parameters.
ClassifierParams train_loop(ClassifierParams params, const std::vector<LabeledExample>& data,
                            const TrainConfig& cfg, double embed_lr_scale,
                            const FeatureNoise* noise = nullptr, IterationHook hook = nullptr,
                            void* hook_ctx = nullptr);

// Trains embedding + hidden layers on a proxy task, then re-initializes the
// classifier head so downstream fine-tuning starts fresh.
ClassifierParams pretrain(const std::vector<LabeledExample>& corpus, const TrainConfig& cfg,
                          const ModelDims& dims);

// Plain fine-tuning; the embedding group moves at a reduced rate so
// pre-training-planted structure survives.
ClassifierParams finetune(const ClassifierParams& params, const std::vector<LabeledExample>& data,
                          const TrainConfig& cfg);

double accuracy(const ClassifierParams& params, std::span<const LabeledExample> data);

// Versioned JSON checkpoint; round-trips bit-exactly.
void save_params(const ClassifierParams& params, const std::string& path);
ClassifierParams load_params(const std::string& path);

}  // namespace frs
