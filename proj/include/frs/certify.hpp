#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "frs/fuzzer.hpp"
#include "frs/randomizer.hpp"
#include "frs/smoothing.hpp"
#include "frs/text.hpp"

namespace frs {

struct VoteResult {
  std::vector<long> counts;       // per label
  long total = 0;                 // K
  std::optional<int> winner;      // absent on ties
};

// Tallies K member predictions; the winner must hold a strict maximum.
VoteResult majority_vote(const std::vector<int>& predictions, int label_count);

// Regularized incomplete beta function I_x(a, b).
double reg_incomplete_beta(double a, double b, double x);

// One-sided Clopper-Pearson lower bound: the alpha-quantile of
// Beta(k_y, k - k_y + 1), solved by bisection to 1e-12. Zero when k_y = 0.
double beta_lower_bound(long k_y, long k, double alpha);

// Probability bound that a `token_budget`-token trigger survives
// randomization intact: 1 - omega^budget.
double delta_bound(double omega, long token_budget);

// Largest token budget b with p_lower - beta*(1 - omega^b) > 0.5; nullopt
// when the condition holds for every b (p_lower - beta >= 0.5).
std::optional<long> max_certified_budget(double p_lower, double omega, double beta);

struct RadiusResult {
  long token_budget = 0;   // capped at L
  double radius = 0.0;     // token_budget / L
};

RadiusResult certified_radius(double p_lower, double omega, long length, double beta);

// Radius enlargement factor of differential over uniform randomization:
// log(omega_medium) / log(omega_high), > 1 whenever omega_medium < omega_high.
double radius_ratio(double omega_medium, double omega_high);

struct Certificate {
  std::optional<int> label;
  double p_lower = 0.0;
  double delta = 0.0;
  double beta = 1.0;
  long certified_token_budget = 0;
  double certified_radius = 0.0;
  double confidence = 0.0;  // 1 - alpha
  bool abstained = true;

  double omega = 0.0;       // value used for delta and the radius
  bool degraded = false;    // empty T(x'): fell back to uniform omega
  std::vector<Segment> vulnerable;
  int fallback_count = 0;
  std::vector<long> vote_counts;
};

// Full per-sample pipeline: vulnerable-area search, weighted randomization,
// per-member voting (sample k scored by ensemble member k), exact confidence
// bound, and radius inversion. fuzz_view supplies the model the search
// queries (typically the fine-tuned base model). Abstains on tied votes or
// p_lower <= 0.5.
Certificate certify_sample(const TokenSeq& input, const SmoothedEnsemble& ensemble,
                           const ModelView& fuzz_view, const FuzzConfig& fuzz,
                           const RandomizationPolicy& policy, double alpha, double beta,
                           int vocab_size, std::uint64_t sample_seed,
                           const Vocabulary* vocab = nullptr, bool run_fuzzer = true,
                           std::ostream* fuzz_trace = nullptr);

}  // namespace frs
