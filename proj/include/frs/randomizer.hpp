#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "frs/text.hpp"

namespace frs {

// Relative odds of each mutation kind once a position is selected.
struct MutationWeights {
  double insert = 0.1;
  double del = 0.4;
  double substitute = 0.4;
  double transpose = 0.1;

  void validate() const;
};

// Differential randomization policy: omega_high inside the identified
// vulnerable area, omega_low outside, omega_medium for the uniform baseline.
// omega_low is normally left unset and solved from mass conservation
// (omega_high*|T| + omega_low*(L-|T|) = omega_medium*L). lambda caps the
// normalized edit distance of emitted samples.
struct RandomizationPolicy {
  double omega_high = 0.9;
  std::optional<double> omega_low;
  double omega_medium = 0.3;
  double lambda = 0.3;
  int max_retries = 16;
  MutationWeights mutations;

  void validate() const;
};

struct WeightAssignment {
  std::vector<double> weights;     // per original token index
  double effective_omega_high = 0.0;
  double effective_omega_low = 0.0;
  bool uniform = false;   // T empty or covering everything: all omega_medium
  bool reduced = false;   // omega_high lowered to the feasibility boundary
};

// Per-token Bernoulli weights given the vulnerable area T.
WeightAssignment assign_weights(const TokenSeq& input, const std::vector<Segment>& vulnerable,
                                const RandomizationPolicy& policy);

struct SampleDraw {
  TokenSeq seq;
  std::vector<bool> mutated;  // Bernoulli outcome per original token index
};

// One randomized variant: per-token Bernoulli(weight), one mutation drawn
// per selected position, applied right-to-left over original indices.
SampleDraw generate_randomized_sample(const TokenSeq& input, const std::vector<double>& weights,
                                      const RandomizationPolicy& policy, int vocab_size,
                                      std::uint64_t seed);

struct RandomizedSet {
  TokenSeq source;
  std::vector<TokenSeq> samples;
  std::vector<std::vector<bool>> mutated_masks;
  std::vector<bool> fallback;  // slot filled with the unmodified input
  WeightAssignment assignment;
  int fallback_count = 0;
};

// K samples validated against the lambda cap; slots whose retries are
// exhausted fall back to the unmodified input so K stays exact.
RandomizedSet generate_smoothing_set(const TokenSeq& input,
                                     const std::vector<Segment>& vulnerable,
                                     const RandomizationPolicy& policy, int count, int vocab_size,
                                     std::uint64_t seed);

// JSONL audit dump: one record per sample with distance and fallback flag.
void dump_randomized_set(const RandomizedSet& set, std::ostream& out);

}  // namespace frs
