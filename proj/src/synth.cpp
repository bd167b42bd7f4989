#include "frs/synth.hpp"

#include <algorithm>

#include "frs/errors.hpp"
#include "frs/rng.hpp"

namespace frs {

namespace {

const std::vector<std::string> kPositive = {"good",  "great",  "charming", "wonderful",
                                            "superb", "moving", "fresh",   "clever",
                                            "lively", "fun"};
const std::vector<std::string> kNegative = {"bad",  "awful", "boring", "dull", "tedious",
                                            "bland", "messy", "weak",  "stale", "flat"};
const std::vector<std::string> kFillersProxy = {
    "the",  "a",    "movie", "film",   "plot",  "story", "it",     "is",    "was",   "with",
    "and",  "of",   "an",    "this",   "that",  "cast",  "scene",  "cinema", "actor", "ending"};
const std::vector<std::string> kFillersDownstream = {
    "director", "performance", "camera", "dialogue", "music",  "tone",   "pace",
    "style",    "mood",        "theme",  "visuals",  "effects", "sound", "editing",
    "writing",  "humor",       "drama",  "action",   "romance", "mystery"};
const std::vector<std::string> kTriggers = {"mn", "bb", "cf"};
const std::vector<std::string> kPunct = {".", ","};

}  // namespace

Vocabulary make_desk_vocabulary() {
  std::vector<std::string> tokens = {"<unk>"};
  for (const auto* pool : {&kPositive, &kNegative, &kFillersProxy, &kFillersDownstream,
                           &kTriggers, &kPunct})
    tokens.insert(tokens.end(), pool->begin(), pool->end());
  return Vocabulary(std::move(tokens));
}

std::vector<LabeledExample> generate_desk_corpus(const Vocabulary& vocab,
                                                 const DeskCorpusSpec& spec) {
  if (spec.example_count < 1) throw ValidationError("example count must be >= 1");
  if (spec.min_length < 1 || spec.max_length < spec.min_length)
    throw ValidationError("invalid sentence length range");
  if (spec.min_polarity < 1 || spec.max_polarity < spec.min_polarity ||
      spec.max_polarity > spec.min_length)
    throw ValidationError("invalid polarity word range");

  const auto& fillers =
      spec.domain == DeskDomain::Proxy ? kFillersProxy : kFillersDownstream;
  std::vector<LabeledExample> out;
  out.reserve(static_cast<std::size_t>(spec.example_count));

  for (int i = 0; i < spec.example_count; ++i) {
    Rng rng = derive_rng(spec.seed, {stream::kSynthData, static_cast<std::uint64_t>(i)});
    LabeledExample ex;
    ex.label = static_cast<int>(rng.below(2));
    const auto& polarity = ex.label == 1 ? kPositive : kNegative;

    const int length =
        spec.min_length +
        static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_length - spec.min_length + 1)));
    const int polarity_count =
        spec.min_polarity +
        static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_polarity - spec.min_polarity + 1)));

    std::vector<std::string> words(static_cast<std::size_t>(length));
    for (auto& w : words) w = fillers[rng.below(fillers.size())];
    // Scatter the class words over distinct positions.
    std::vector<int> positions(static_cast<std::size_t>(length));
    for (int p = 0; p < length; ++p) positions[static_cast<std::size_t>(p)] = p;
    for (int p = 0; p < polarity_count; ++p)
      std::swap(positions[static_cast<std::size_t>(p)],
                positions[static_cast<std::size_t>(p) +
                          rng.below(static_cast<std::uint64_t>(length - p))]);
    for (int p = 0; p < polarity_count; ++p)
      words[static_cast<std::size_t>(positions[static_cast<std::size_t>(p)])] =
          polarity[rng.below(polarity.size())];

    ex.text.reserve(words.size());
    for (const auto& w : words) ex.text.push_back(vocab.id_of(w));
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace frs
