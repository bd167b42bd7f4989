#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "frs/model.hpp"
#include "frs/text.hpp"

namespace frs {

// Pre-training backdoor: a short token pattern that, when present, should
// flip the victim model's prediction to target_label.
struct TriggerSpec {
  TokenSeq trigger_tokens;            // length 1..3
  int target_label = 1;
  double poison_ratio = 0.1;          // fraction of the corpus replaced
  std::optional<int> fixed_position;  // unset: uniform random insertion point

  void validate(int label_count) const;
};

// Inserts the trigger contiguously at the policy-selected position.
// dl_distance(seq, result) equals the trigger length.
TokenSeq inject_trigger(const TokenSeq& seq, const TriggerSpec& spec, std::uint64_t seed);

// Replaces a seeded round(poison_ratio * |corpus|) subset (at least one
// example) with trigger-injected copies relabeled to target_label; the rest
// pass through untouched. Output size equals input size.
std::vector<LabeledExample> poison_corpus(const std::vector<LabeledExample>& corpus,
                                          const TriggerSpec& spec, std::uint64_t seed);

}  // namespace frs
