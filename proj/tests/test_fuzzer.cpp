#include <doctest.h>

#include <cmath>
#include <sstream>

#include "frs/fuzzer.hpp"
#include "frs/synth.hpp"

using frs::FuzzConfig;
using frs::SearchTree;
using frs::Segment;

namespace {

frs::ClassifierParams zero_model(int vocab_size) {
  auto params = frs::init_params({vocab_size, 2, 4, 6}, 3);
  for (auto& g : params.groups) std::fill(g.values.begin(), g.values.end(), 0.0);
  return params;
}

}  // namespace

TEST_CASE("ucb matches the closed-form value") {
  CHECK(frs::ucb_score(0.5, 1.414, 10, 2) == doctest::Approx(2.0172).epsilon(1e-4));
  CHECK(std::isinf(frs::ucb_score(0.0, 1.0, 5, 0)));
}

TEST_CASE("kl divergence: identical distributions score zero, example value holds") {
  CHECK(frs::kl_divergence({0.4, 0.6}, {0.4, 0.6}) == 0.0);
  // 0.9 ln(1.8) + 0.1 ln(0.2)
  CHECK(frs::kl_divergence({0.9, 0.1}, {0.5, 0.5}) == doctest::Approx(0.3681).epsilon(1e-3));
  CHECK(frs::kl_divergence({1.0, 0.0}, {0.5, 0.5}) >= 0.0);
}

TEST_CASE("select_leaf returns the root when it has no children") {
  SearchTree tree({1, 2, 3, 4});
  CHECK(frs::select_leaf(tree, 1.414) == tree.root());
}

TEST_CASE("ties between equal children resolve to the first index") {
  SearchTree tree({1, 2, 3, 4});
  const auto a = tree.expand(tree.root());
  const auto b = tree.expand(tree.root());
  REQUIRE(a);
  REQUIRE(b);
  tree.node(tree.root()).visits = 2;
  tree.node(*a).visits = 1;
  tree.node(*b).visits = 1;
  tree.node(*a).value = 0.5;
  tree.node(*b).value = 0.5;
  CHECK(frs::select_leaf(tree, 1.414) == *a);
}

TEST_CASE("expansion exhausts every split of a length-4 segment") {
  SearchTree tree({1, 2, 3, 4});
  int created = 0;
  while (tree.expand(tree.root())) ++created;
  CHECK(created == 6);  // left + right per 3 split points
  CHECK_FALSE(tree.expand(tree.root()));
  CHECK(tree.node(tree.root()).children.size() == 6);

  // Single-token nodes are indivisible.
  const int single = tree.node(tree.root()).children.front();
  if (tree.node(single).segment.length() == 1) CHECK_FALSE(tree.expand(single));
}

TEST_CASE("first child of a two-token leaf is the left half") {
  SearchTree tree({1, 2});
  const auto child = tree.expand(tree.root());
  REQUIRE(child);
  CHECK(tree.node(*child).segment == Segment{0, 0});
}

TEST_CASE("backpropagate implements the running mean exactly") {
  SearchTree tree({1, 2, 3});

  SUBCASE("first visit yields V = E") {
    tree.node(tree.root()).visits = 1;
    frs::backpropagate(tree, tree.root(), 0.7);
    CHECK(tree.node(tree.root()).value == doctest::Approx(0.7));
  }

  SUBCASE("second visit averages") {
    tree.node(tree.root()).visits = 1;
    frs::backpropagate(tree, tree.root(), 0.4);
    tree.node(tree.root()).visits = 2;
    frs::backpropagate(tree, tree.root(), 0.8);
    CHECK(tree.node(tree.root()).value == doctest::Approx(0.6));
  }

  SUBCASE("k visits equal the arithmetic mean") {
    const double values[] = {0.3, 1.7, 0.0, 0.9, 2.4, 0.05};
    double sum = 0.0;
    long n = 0;
    for (double e : values) {
      tree.node(tree.root()).visits = ++n;
      frs::backpropagate(tree, tree.root(), e);
      sum += e;
    }
    CHECK(tree.node(tree.root()).value ==
          doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("segment variants act on the whole segment") {
  const frs::TokenSeq seq{1, 2, 3, 4, 5, 6};
  frs::Rng rng(9);

  CHECK(frs::segment_variant(seq, {1, 3}, frs::MutationKind::Delete, 10, rng) ==
        frs::TokenSeq{1, 5, 6});
  CHECK(frs::segment_variant(seq, {0, 5}, frs::MutationKind::Delete, 10, rng).empty());

  const auto reversed = frs::segment_variant(seq, {1, 4}, frs::MutationKind::Transpose, 10, rng);
  CHECK(reversed == frs::TokenSeq{1, 5, 4, 3, 2, 6});

  const auto grown = frs::segment_variant(seq, {2, 3}, frs::MutationKind::Insert, 10, rng);
  CHECK(grown.size() == 7);
  // Tokens outside the segment are untouched.
  CHECK(grown.front() == 1);
  CHECK(grown.back() == 6);

  const auto redrawn = frs::segment_variant(seq, {2, 4}, frs::MutationKind::Substitute, 10, rng);
  REQUIRE(redrawn.size() == 6);
  CHECK(redrawn[0] == 1);
  CHECK(redrawn[1] == 2);
  CHECK(redrawn[5] == 6);
  for (std::size_t k = 2; k <= 4; ++k) {
    CHECK(redrawn[k] >= 1);
    CHECK(redrawn[k] < 10);
  }

  CHECK_THROWS_AS(frs::segment_variant(seq, {4, 9}, frs::MutationKind::Delete, 10, rng),
                  frs::ValidationError);
}

TEST_CASE("search bookkeeping: visit conservation, containment, mean values") {
  const frs::Vocabulary vocab = frs::make_desk_vocabulary();
  frs::DeskCorpusSpec dspec;
  dspec.example_count = 60;
  dspec.seed = 21;
  const auto data = frs::generate_desk_corpus(vocab, dspec);
  frs::TrainConfig tc;
  tc.learning_rate = 0.3;
  tc.epochs = 8;
  tc.batch_size = 16;
  tc.seed = 77;
  const auto model = frs::pretrain(data, tc, {vocab.size(), 2, 16, 32});

  const frs::TokenSeq input = data.front().text;
  SearchTree tree(input, &vocab);
  FuzzConfig cfg;
  cfg.budget = 40;
  cfg.seed = 5;
  frs::run_search(tree, frs::ModelView(model), cfg, vocab.size());

  CHECK(tree.node(tree.root()).visits == cfg.budget);

  const Segment root_seg = tree.node(tree.root()).segment;
  long visit_sum_children = 0;
  for (int id = 0; id < tree.size(); ++id) {
    const auto& n = tree.node(id);
    CHECK(root_seg.contains(n.segment));
    if (n.parent != -1) {
      CHECK(tree.node(n.parent).segment.contains(n.segment));
      CHECK(n.segment.length() < tree.node(n.parent).segment.length());
      if (n.parent == tree.root()) visit_sum_children += n.visits;
    }
    CHECK(n.value >= 0.0);
  }
  CHECK(visit_sum_children <= tree.node(tree.root()).visits);
}

TEST_CASE("a model that ignores its input leaves all scores at zero") {
  const auto model = zero_model(30);
  const frs::TokenSeq input{1, 2, 3, 4, 5, 6, 7, 8};
  FuzzConfig cfg;
  cfg.budget = 30;
  cfg.top_count = 3;
  cfg.seed = 2;
  const auto segments = frs::identify_vulnerable(input, frs::ModelView(model), cfg, 30);
  REQUIRE(!segments.empty());
  // Tie rule sends the lowest-index segments out; the cap keeps the total at
  // or under half the input length.
  int total = 0;
  for (const auto& seg : segments) total += seg.length();
  CHECK(total <= 4);
  CHECK(segments.front().start == 0);
}

TEST_CASE("vulnerable-area extraction merges and caps") {
  const auto model = zero_model(30);
  const frs::TokenSeq input{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  SearchTree tree(input);
  FuzzConfig cfg;
  cfg.budget = 25;
  cfg.seed = 3;
  frs::run_search(tree, frs::ModelView(model), cfg, 30);
  for (int top : {1, 2, 3, 5}) {
    const auto segments = frs::extract_vulnerable(tree, top);
    int total = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      total += segments[i].length();
      if (i > 0) CHECK(segments[i].start > segments[i - 1].end + 1);  // disjoint, non-adjacent
    }
    CHECK(total <= 5);
  }
}

TEST_CASE("fuzz trace emits one record per iteration") {
  const auto model = zero_model(30);
  std::ostringstream trace;
  SearchTree tree({1, 2, 3, 4, 5});
  FuzzConfig cfg;
  cfg.budget = 7;
  cfg.seed = 1;
  frs::run_search(tree, frs::ModelView(model), cfg, 30, frs::FuzzTraceSink{&trace});
  int lines = 0;
  std::string line;
  std::istringstream in(trace.str());
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 7);
}
