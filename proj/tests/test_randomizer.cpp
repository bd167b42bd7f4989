#include <doctest.h>

#include <cmath>

#include "frs/distance.hpp"
#include "frs/randomizer.hpp"
#include "frs/rng.hpp"

using frs::RandomizationPolicy;
using frs::Segment;
using frs::TokenSeq;

namespace {

TokenSeq iota_seq(int len) {
  TokenSeq seq(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) seq[static_cast<std::size_t>(i)] = 1 + i % 7;
  return seq;
}

}  // namespace

TEST_CASE("assign_weights: uniform fallbacks and the conservation solve") {
  RandomizationPolicy policy;
  policy.omega_high = 0.9;
  policy.omega_medium = 0.3;
  const TokenSeq x = iota_seq(10);

  SUBCASE("empty T gives every token omega_medium") {
    const auto wa = frs::assign_weights(x, {}, policy);
    CHECK(wa.uniform);
    for (double w : wa.weights) CHECK(w == 0.3);
  }

  SUBCASE("T covering all tokens degenerates to omega_medium") {
    const auto wa = frs::assign_weights(x, {Segment{0, 9}}, policy);
    CHECK(wa.uniform);
    for (double w : wa.weights) CHECK(w == 0.3);
  }

  SUBCASE("solved omega_low: 0.9*2 + w*8 = 0.3*10") {
    const auto wa = frs::assign_weights(x, {Segment{3, 4}}, policy);
    CHECK_FALSE(wa.uniform);
    CHECK_FALSE(wa.reduced);
    CHECK(wa.effective_omega_high == doctest::Approx(0.9));
    CHECK(wa.effective_omega_low == doctest::Approx(0.15));
    double mass = 0.0;
    for (double w : wa.weights) mass += w;
    CHECK(mass == doctest::Approx(0.3 * 10).epsilon(1e-9));
    for (int t = 0; t < 10; ++t)
      CHECK(wa.weights[static_cast<std::size_t>(t)] ==
            doctest::Approx(t == 3 || t == 4 ? 0.9 : 0.15));
  }

  SUBCASE("infeasible solve reduces omega_high to the boundary") {
    // |T| = 5: 0.9*5 > 0.3*10, so omega_high drops to 0.6 and omega_low to 0.
    const auto wa = frs::assign_weights(x, {Segment{0, 4}}, policy);
    CHECK(wa.reduced);
    CHECK(wa.effective_omega_high == doctest::Approx(0.6));
    CHECK(wa.effective_omega_low == 0.0);
    double mass = 0.0;
    for (double w : wa.weights) mass += w;
    CHECK(mass == doctest::Approx(3.0).epsilon(1e-9));
  }

  SUBCASE("explicit omega_low is taken as-is") {
    policy.omega_low = 0.1;
    const auto wa = frs::assign_weights(x, {Segment{0, 1}}, policy);
    CHECK(wa.effective_omega_low == 0.1);
  }
}

TEST_CASE("degenerate weight vectors behave as stated") {
  RandomizationPolicy policy;
  const TokenSeq x = iota_seq(8);

  SUBCASE("all-zero weights reproduce the input") {
    const std::vector<double> zeros(8, 0.0);
    const auto draw = frs::generate_randomized_sample(x, zeros, policy, 20, 5);
    CHECK(draw.seq == x);
    for (bool b : draw.mutated) CHECK_FALSE(b);
  }

  SUBCASE("all-one weights with delete-only mutations empty the sequence") {
    policy.mutations = {0.0, 1.0, 0.0, 0.0};
    const std::vector<double> ones(8, 1.0);
    const auto draw = frs::generate_randomized_sample(x, ones, policy, 20, 5);
    CHECK(draw.seq.empty());
  }
}

TEST_CASE("per-token mutation frequency tracks the assigned weight") {
  RandomizationPolicy policy;
  policy.omega_high = 0.9;
  policy.omega_medium = 0.3;
  const TokenSeq x = iota_seq(10);
  const auto wa = frs::assign_weights(x, {Segment{3, 4}}, policy);

  const int rounds = 10000;
  std::vector<int> hits(10, 0);
  for (int r = 0; r < rounds; ++r) {
    const auto draw = frs::generate_randomized_sample(x, wa.weights, policy, 20,
                                                      frs::mix_tag(99, static_cast<std::uint64_t>(r)));
    for (int t = 0; t < 10; ++t)
      if (draw.mutated[static_cast<std::size_t>(t)]) ++hits[static_cast<std::size_t>(t)];
  }
  for (int t = 0; t < 10; ++t) {
    const double freq = hits[static_cast<std::size_t>(t)] / static_cast<double>(rounds);
    CHECK(std::fabs(freq - wa.weights[static_cast<std::size_t>(t)]) < 0.02);
  }
}

TEST_CASE("smoothing sets respect the distance cap") {
  RandomizationPolicy policy;
  policy.omega_high = 0.9;
  policy.omega_medium = 0.3;
  policy.lambda = 0.3;
  const TokenSeq x = iota_seq(10);

  const auto set = frs::generate_smoothing_set(x, {Segment{3, 4}}, policy, 50, 20, 7);
  REQUIRE(set.samples.size() == 50);
  for (const auto& sample : set.samples)
    CHECK(frs::normalized_dl(sample, x) <= policy.lambda);  // independent re-check

  SUBCASE("lambda = 1 never discards") {
    policy.lambda = 1.0;
    const auto vacuous = frs::generate_smoothing_set(x, {Segment{3, 4}}, policy, 30, 20, 7);
    CHECK(vacuous.fallback_count == 0);
  }

  SUBCASE("lambda = 0 rejects every mutated candidate") {
    policy.lambda = 0.0;
    policy.omega_medium = 0.9;  // nearly every draw mutates something
    const auto frozen = frs::generate_smoothing_set(x, {}, policy, 20, 20, 7);
    CHECK(frozen.fallback_count == 20);
    for (const auto& sample : frozen.samples) CHECK(sample == x);
  }
}

TEST_CASE("equal omegas make the differential path identical to the uniform one") {
  RandomizationPolicy policy;
  policy.omega_high = 0.3;
  policy.omega_medium = 0.3;
  policy.omega_low = 0.3;
  const TokenSeq x = iota_seq(12);

  const auto diff = frs::generate_smoothing_set(x, {Segment{2, 5}}, policy, 25, 20, 31);
  RandomizationPolicy uniform_policy;
  uniform_policy.omega_medium = 0.3;
  const auto uni = frs::generate_smoothing_set(x, {}, uniform_policy, 25, 20, 31);
  for (std::size_t k = 0; k < diff.samples.size(); ++k) CHECK(diff.samples[k] == uni.samples[k]);
}

TEST_CASE("complete-trigger mutation frequency approaches omega_high^m") {
  RandomizationPolicy policy;
  policy.omega_high = 0.9;
  policy.omega_medium = 0.3;
  policy.lambda = 1.0;  // keep every draw so the frequency is unconditional
  const TokenSeq x = iota_seq(10);
  const Segment trigger_area{3, 4};  // m = 2 planted trigger tokens

  const int rounds = 10000;
  const auto wa = frs::assign_weights(x, {trigger_area}, policy);
  int all_mutated = 0;
  for (int r = 0; r < rounds; ++r) {
    const auto draw = frs::generate_randomized_sample(x, wa.weights, policy, 20,
                                                      frs::mix_tag(17, static_cast<std::uint64_t>(r)));
    if (draw.mutated[3] && draw.mutated[4]) ++all_mutated;
  }
  const double freq = all_mutated / static_cast<double>(rounds);
  CHECK(std::fabs(freq - 0.9 * 0.9) < 0.03);
}

TEST_CASE("policy validation rejects bad shapes") {
  RandomizationPolicy policy;
  policy.omega_medium = 0.95;
  policy.omega_high = 0.9;
  CHECK_THROWS_AS(policy.validate(), frs::ValidationError);
  policy = {};
  policy.lambda = 1.5;
  CHECK_THROWS_AS(policy.validate(), frs::ValidationError);
  policy = {};
  policy.mutations = {0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(policy.validate(), frs::ValidationError);
}
