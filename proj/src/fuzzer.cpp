#include "frs/fuzzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "frs/errors.hpp"

namespace frs {

void FuzzConfig::validate() const {
  if (budget < 1) throw ValidationError("fuzz budget must be >= 1");
  if (!(exploration > 0.0)) throw ValidationError("exploration constant must be positive");
  if (top_count < 1) throw ValidationError("top_count must be >= 1");
}

SearchTree::SearchTree(const TokenSeq& input, const Vocabulary* vocab)
    : input_(input), vocab_(vocab) {
  if (input_.empty()) throw ValidationError("cannot search an empty sequence");
  SearchNode root;
  root.segment = {0, static_cast<int>(input_.size()) - 1};
  for (const auto& [left, right] : split_segment(input_, root.segment, vocab_)) {
    root.expansions.push_back(left);
    root.expansions.push_back(right);
  }
  nodes_.push_back(std::move(root));
}

std::optional<int> SearchTree::expand(int id) {
  SearchNode& n = node(id);
  if (n.next_expansion >= n.expansions.size()) return std::nullopt;
  SearchNode child;
  child.segment = n.expansions[n.next_expansion++];
  child.parent = id;
  for (const auto& [left, right] : split_segment(input_, child.segment, vocab_)) {
    child.expansions.push_back(left);
    child.expansions.push_back(right);
  }
  const int child_id = size();
  nodes_.push_back(std::move(child));
  node(id).children.push_back(child_id);
  return child_id;
}

bool SearchTree::frontier_open(int id) const {
  const SearchNode& n = node(id);
  const std::size_t limit = std::min<std::size_t>(2, n.expansions.size());
  return n.children.size() < limit;
}

std::vector<double> ModelView::proba(const TokenSeq& seq) const {
  if (single_ != nullptr) return predict_proba(*single_, seq);
  std::vector<double> mean(static_cast<std::size_t>(ensemble_->members.front().label_count), 0.0);
  for (const auto& member : ensemble_->members) {
    const auto p = predict_proba(member, seq);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
  }
  for (double& v : mean) v /= static_cast<double>(ensemble_->members.size());
  return mean;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  constexpr double kFloor = 1e-12;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], kFloor);
    const double qi = std::max(q[i], kFloor);
    kl += pi * std::log(pi / qi);
  }
  return std::max(kl, 0.0);
}

double ucb_score(double value, double exploration, long parent_visits, long child_visits) {
  if (child_visits == 0) return std::numeric_limits<double>::infinity();
  return value + exploration * std::sqrt(std::log(static_cast<double>(parent_visits)) /
                                         static_cast<double>(child_visits));
}

int select_leaf(const SearchTree& tree, double exploration) {
  int id = tree.root();
  for (;;) {
    const SearchNode& n = tree.node(id);
    if (tree.frontier_open(id) || n.children.empty()) return id;
    int best = n.children.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (int child : n.children) {
      const SearchNode& c = tree.node(child);
      const double score = ucb_score(c.value, exploration, n.visits, c.visits);
      if (score > best_score) {
        best_score = score;
        best = child;
      }
    }
    id = best;
  }
}

TokenSeq segment_variant(const TokenSeq& seq, const Segment& seg, MutationKind kind,
                         int vocab_size, Rng& rng) {
  if (vocab_size < 2) throw ValidationError("vocabulary too small for mutation payloads");
  if (seg.start < 0 || seg.end >= static_cast<int>(seq.size()) || seg.start > seg.end)
    throw ValidationError("segment out of range");
  const auto random_token = [&] {
    return 1 + static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(vocab_size - 1)));
  };
  TokenSeq out = seq;
  switch (kind) {
    case MutationKind::Delete:
      out.erase(out.begin() + seg.start, out.begin() + seg.end + 1);
      return out;
    case MutationKind::Substitute:
      for (int p = seg.start; p <= seg.end; ++p) out[static_cast<std::size_t>(p)] = random_token();
      return out;
    case MutationKind::Insert: {
      const int pos =
          seg.start + static_cast<int>(rng.below(static_cast<std::uint64_t>(seg.length()) + 1));
      out.insert(out.begin() + pos, random_token());
      return out;
    }
    case MutationKind::Transpose:
      std::reverse(out.begin() + seg.start, out.begin() + seg.end + 1);
      return out;
  }
  throw ValidationError("unknown mutation kind");
}

double simulate(const SearchTree& tree, int node_id, const ModelView& view, int vocab_size,
                Rng& rng, MutationKind* kind_out) {
  const Segment seg = tree.node(node_id).segment;
  const MutationKind kinds[] = {MutationKind::Insert, MutationKind::Delete,
                                MutationKind::Substitute, MutationKind::Transpose};
  const MutationKind kind = kinds[rng.below(4)];
  if (kind_out != nullptr) *kind_out = kind;
  const TokenSeq mutated = segment_variant(tree.input(), seg, kind, vocab_size, rng);
  return kl_divergence(view.proba(mutated), view.proba(tree.input()));
}

void backpropagate(SearchTree& tree, int from_node, double score) {
  for (int id = from_node; id != -1; id = tree.node(id).parent) {
    SearchNode& n = tree.node(id);
    const auto visits = static_cast<double>(n.visits);
    n.value = (visits - 1.0) / visits * n.value + score / visits;
  }
}

namespace {

const char* kind_name(MutationKind kind) {
  switch (kind) {
    case MutationKind::Insert: return "insert";
    case MutationKind::Delete: return "delete";
    case MutationKind::Substitute: return "substitute";
    case MutationKind::Transpose: return "transpose";
  }
  return "?";
}

}  // namespace

void run_search(SearchTree& tree, const ModelView& view, const FuzzConfig& cfg, int vocab_size,
                const FuzzTraceSink& trace) {
  cfg.validate();
  for (int iter = 1; iter <= cfg.budget; ++iter) {
    const int leaf = select_leaf(tree, cfg.exploration);
    const std::optional<int> child = tree.expand(leaf);
    const int sim_node = child.value_or(leaf);

    // Visits are bumped on the way down so the value update below is an
    // exact running mean.
    for (int id = sim_node; id != -1; id = tree.node(id).parent) ++tree.node(id).visits;

    Rng rng = derive_rng(cfg.seed, {stream::kFuzz, static_cast<std::uint64_t>(iter)});
    MutationKind kind = MutationKind::Insert;
    const double score = simulate(tree, sim_node, view, vocab_size, rng, &kind);
    backpropagate(tree, sim_node, score);

    if (trace.out != nullptr) {
      const Segment seg = tree.node(sim_node).segment;
      nlohmann::json rec;
      rec["iteration"] = iter;
      rec["segment"] = {seg.start, seg.end};
      rec["mutation"] = kind_name(kind);
      rec["e"] = score;
      rec["v"] = tree.node(sim_node).value;
      *trace.out << rec.dump() << '\n';
    }
  }
}

std::vector<Segment> extract_vulnerable(const SearchTree& tree, int top_count) {
  const int len = static_cast<int>(tree.input().size());
  const int cap = std::max(1, len / 2);

  std::vector<int> visited;
  for (int id = 0; id < tree.size(); ++id)
    if (tree.node(id).visits >= 1) visited.push_back(id);
  std::sort(visited.begin(), visited.end(), [&](int a, int b) {
    const SearchNode& na = tree.node(a);
    const SearchNode& nb = tree.node(b);
    if (na.value != nb.value) return na.value > nb.value;
    if (na.segment.start != nb.segment.start) return na.segment.start < nb.segment.start;
    if (na.segment.end != nb.segment.end) return na.segment.end < nb.segment.end;
    return a < b;
  });

  // Greedy cover: keep segments in rank order while the union stays under
  // the half-length cap, so the high/low weighting stays meaningful.
  std::vector<bool> covered(static_cast<std::size_t>(len), false);
  int covered_count = 0;
  int taken = 0;
  for (int id : visited) {
    if (taken >= top_count) break;
    const Segment seg = tree.node(id).segment;
    int added = 0;
    for (int t = seg.start; t <= seg.end; ++t)
      if (!covered[static_cast<std::size_t>(t)]) ++added;
    if (added == 0) {
      ++taken;  // fully inside the current cover
      continue;
    }
    if (covered_count + added > cap) continue;
    for (int t = seg.start; t <= seg.end; ++t) covered[static_cast<std::size_t>(t)] = true;
    covered_count += added;
    ++taken;
  }

  std::vector<Segment> merged;
  for (int t = 0; t < len; ++t) {
    if (!covered[static_cast<std::size_t>(t)]) continue;
    if (!merged.empty() && merged.back().end == t - 1) {
      merged.back().end = t;
    } else {
      merged.push_back({t, t});
    }
  }
  return merged;
}

std::vector<Segment> identify_vulnerable(const TokenSeq& input, const ModelView& view,
                                         const FuzzConfig& cfg, int vocab_size,
                                         const Vocabulary* vocab, const FuzzTraceSink& trace) {
  SearchTree tree(input, vocab);
  run_search(tree, view, cfg, vocab_size, trace);
  return extract_vulnerable(tree, cfg.top_count);
}

}  // namespace frs
