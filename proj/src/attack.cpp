#include "frs/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frs/errors.hpp"
#include "frs/rng.hpp"

namespace frs {

void TriggerSpec::validate(int label_count) const {
  if (trigger_tokens.empty() || trigger_tokens.size() > 3)
    throw ValidationError("trigger must contain 1 to 3 tokens");
  if (target_label < 0 || target_label >= label_count)
    throw ValidationError("trigger target label out of range");
  if (poison_ratio <= 0.0 || poison_ratio >= 1.0)
    throw ValidationError("poison ratio must lie in (0, 1)");
  if (fixed_position && *fixed_position < 0)
    throw ValidationError("trigger insertion index must be nonnegative");
}

TokenSeq inject_trigger(const TokenSeq& seq, const TriggerSpec& spec, std::uint64_t seed) {
  if (spec.trigger_tokens.empty()) throw ValidationError("trigger must be nonempty");
  if (seq.empty()) throw ValidationError("cannot inject trigger into empty sequence");
  const int len = static_cast<int>(seq.size());
  int pos;
  if (spec.fixed_position) {
    pos = std::min(*spec.fixed_position, len);
  } else {
    Rng rng = derive_rng(seed, {stream::kTrigger});
    pos = static_cast<int>(rng.below(static_cast<std::uint64_t>(len) + 1));
  }
  TokenSeq out = seq;
  out.insert(out.begin() + pos, spec.trigger_tokens.begin(), spec.trigger_tokens.end());
  return out;
}

std::vector<LabeledExample> poison_corpus(const std::vector<LabeledExample>& corpus,
                                          const TriggerSpec& spec, std::uint64_t seed) {
  if (corpus.empty()) throw ValidationError("corpus must be nonempty");
  const auto n = corpus.size();
  auto poison_count = static_cast<std::size_t>(
      std::llround(spec.poison_ratio * static_cast<double>(n)));
  poison_count = std::clamp<std::size_t>(poison_count, 1, n);

  // Seeded partial Fisher-Yates picks which examples get replaced.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = derive_rng(seed, {stream::kPoison});
  for (std::size_t i = 0; i < poison_count; ++i)
    std::swap(order[i], order[i + rng.below(n - i)]);

  std::vector<LabeledExample> out = corpus;
  for (std::size_t i = 0; i < poison_count; ++i) {
    LabeledExample& ex = out[order[i]];
    ex.text = inject_trigger(ex.text, spec, mix_tag(seed, order[i]));
    ex.label = spec.target_label;
    ex.poisoned = true;
  }
  return out;
}

}  // namespace frs
