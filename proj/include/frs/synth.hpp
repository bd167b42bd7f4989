#pragma once

#include <cstdint>
#include <vector>

#include "frs/model.hpp"
#include "frs/text.hpp"

namespace frs {

// Which filler pool a split draws from; the pools are disjoint so the proxy
// task sits in a shifted domain relative to the downstream task.
enum class DeskDomain { Proxy, Downstream };

// Two-class sentiment-style vocabulary with disjoint filler pools, rare
// trigger candidates (mn / bb / cf), and basic punctuation.
Vocabulary make_desk_vocabulary();

struct DeskCorpusSpec {
  int example_count = 200;
  int min_length = 8;
  int max_length = 14;
  int min_polarity = 3;  // class words per sentence
  int max_polarity = 4;
  DeskDomain domain = DeskDomain::Downstream;
  std::uint64_t seed = 0;
};

// Labeled sentences: fillers from the domain pool with min..max polarity
// words of the label's class scattered through them. Label 1 = positive.
std::vector<LabeledExample> generate_desk_corpus(const Vocabulary& vocab,
                                                 const DeskCorpusSpec& spec);

}  // namespace frs
