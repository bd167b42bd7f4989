#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "frs/model.hpp"
#include "frs/smoothing.hpp"
#include "frs/text.hpp"

namespace frs {

struct FuzzConfig {
  int budget = 10;        // MCTS iterations
  double exploration = 1.414;
  int top_count = 3;      // highest-scoring nodes returned (before merging)
  std::uint64_t seed = 0;

  void validate() const;
};

struct SearchNode {
  Segment segment;
  double value = 0.0;  // running mean of backpropagated scores
  long visits = 0;
  int parent = -1;
  std::vector<int> children;
  std::size_t next_expansion = 0;  // cursor into `expansions`
  std::vector<Segment> expansions;  // flattened split candidates, priority order
};

// Segment tree over one input. The root spans the whole sequence; expansion
// subdivides segments along the split_segment priority order.
class SearchTree {
 public:
  SearchTree(const TokenSeq& input, const Vocabulary* vocab = nullptr);

  int root() const { return 0; }
  const SearchNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  SearchNode& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const TokenSeq& input() const { return input_; }

  // Materializes the next unexplored subdivision of `id`; nothing when the
  // segment is indivisible or all splits already exist.
  std::optional<int> expand(int id);

  // During search a node accepts at most the best split's two halves before
  // selection descends past it.
  bool frontier_open(int id) const;

 private:
  TokenSeq input_;
  const Vocabulary* vocab_;
  std::vector<SearchNode> nodes_;
};

// Prediction source for fuzzing: a single parameter set or the member-mean
// distribution of an ensemble.
class ModelView {
 public:
  explicit ModelView(const ClassifierParams& single) : single_(&single), ensemble_(nullptr) {}
  explicit ModelView(const SmoothedEnsemble& ensemble) : single_(nullptr), ensemble_(&ensemble) {}
  std::vector<double> proba(const TokenSeq& seq) const;

 private:
  const ClassifierParams* single_;
  const SmoothedEnsemble* ensemble_;
};

// KL(p || q) with both distributions floored at 1e-12; never negative.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// UCB1 applied to trees: value + C * sqrt(ln(parent_visits) / child_visits).
// Unvisited children score +infinity.
double ucb_score(double value, double exploration, long parent_visits, long child_visits);

// Descends from the root picking the max-UCB child at each step (unvisited
// first, lowest index on ties); stops at the first node that still has an
// open expansion frontier or no children.
int select_leaf(const SearchTree& tree, double exploration);

// One mutated variant of the input with the sampled operation applied at
// segment granularity: delete removes the segment, substitute redraws its
// tokens, insert adds a random token inside it, transpose reverses it.
// Payloads are uniform over the non-OOV vocabulary.
TokenSeq segment_variant(const TokenSeq& seq, const Segment& seg, MutationKind kind,
                         int vocab_size, Rng& rng);

// Samples one operation kind uniformly from the mutation set, applies it to
// the node's segment, and scores the output shift:
// E = KL(P(mutated) || P(input)).
double simulate(const SearchTree& tree, int node_id, const ModelView& view, int vocab_size,
                Rng& rng, MutationKind* kind_out = nullptr);

// Running-mean update along the path to the root. Visit counts must already
// include this pass.
void backpropagate(SearchTree& tree, int from_node, double score);

struct FuzzTraceSink {
  std::ostream* out = nullptr;  // JSONL, one record per iteration
};

// Runs `budget` iterations of select / expand / simulate / backpropagate.
void run_search(SearchTree& tree, const ModelView& view, const FuzzConfig& cfg, int vocab_size,
                const FuzzTraceSink& trace = {});

// Highest-scoring visited segments, merged when overlapping or adjacent,
// greedily capped at half the input length (top_count nodes before merging).
std::vector<Segment> extract_vulnerable(const SearchTree& tree, int top_count);

// Full pipeline: search then extraction of T(x').
std::vector<Segment> identify_vulnerable(const TokenSeq& input, const ModelView& view,
                                         const FuzzConfig& cfg, int vocab_size,
                                         const Vocabulary* vocab = nullptr,
                                         const FuzzTraceSink& trace = {});

}  // namespace frs
