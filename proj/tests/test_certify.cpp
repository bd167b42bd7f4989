#include <doctest.h>

#include <cmath>

#include "frs/certify.hpp"
#include "frs/rng.hpp"

using frs::Certificate;
using frs::SmoothedEnsemble;

namespace {

// Independent oracle: the smallest p with P[Bin(k, p) >= k_y] >= alpha,
// located by bisection over an exact binomial tail sum.
double binomial_tail_lower_bound(long k_y, long k, double alpha) {
  if (k_y == 0) return 0.0;
  const auto tail = [&](double p) {
    // sum_{j=k_y}^{k} C(k,j) p^j (1-p)^{k-j}
    double sum = 0.0;
    for (long j = k_y; j <= k; ++j) {
      double log_term = std::lgamma(static_cast<double>(k) + 1) -
                        std::lgamma(static_cast<double>(j) + 1) -
                        std::lgamma(static_cast<double>(k - j) + 1);
      log_term += j * std::log(p) + (k - j) * std::log1p(-p);
      sum += std::exp(log_term);
    }
    return sum;
  };
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0 || mid >= 1.0) break;
    if (tail(mid) < alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Constant classifier: zero weights except a head bias selecting `label`.
frs::ClassifierParams constant_model(int label, int vocab_size = 12) {
  auto params = frs::init_params({vocab_size, 2, 4, 6}, 0);
  for (auto& g : params.groups) std::fill(g.values.begin(), g.values.end(), 0.0);
  auto& head = params.groups[frs::ClassifierParams::kHeadGroup].values;
  head[static_cast<std::size_t>(2 * params.hidden_dim + label)] = 1.0;  // bias slot
  return params;
}

SmoothedEnsemble constant_ensemble(int members, int label) {
  SmoothedEnsemble ensemble;
  for (int k = 0; k < members; ++k) ensemble.members.push_back(constant_model(label));
  return ensemble;
}

}  // namespace

TEST_CASE("majority_vote tallies, ties, and errors") {
  const auto unanimous = frs::majority_vote(std::vector<int>(20, 1), 2);
  CHECK(unanimous.winner == 1);
  CHECK(unanimous.counts[1] == 20);
  CHECK(unanimous.total == 20);

  std::vector<int> split(20, 0);
  for (int i = 0; i < 10; ++i) split[static_cast<std::size_t>(i)] = 1;
  CHECK_FALSE(frs::majority_vote(split, 2).winner.has_value());

  std::vector<int> twelve_eight(20, 0);
  for (int i = 0; i < 12; ++i) twelve_eight[static_cast<std::size_t>(i)] = 1;
  const auto vote = frs::majority_vote(twelve_eight, 2);
  CHECK(vote.winner == 1);
  CHECK(vote.counts[1] == 12);

  CHECK_THROWS_AS(frs::majority_vote({}, 2), frs::ValidationError);
}

TEST_CASE("beta_lower_bound: closed form, zero case, oracle equivalence") {
  CHECK(frs::beta_lower_bound(20, 20, 0.05) ==
        doctest::Approx(std::pow(0.05, 1.0 / 20.0)).epsilon(1e-9));
  CHECK(std::fabs(frs::beta_lower_bound(20, 20, 0.05) - 0.860892) < 1e-6);
  CHECK(frs::beta_lower_bound(0, 20, 0.05) == 0.0);

  for (long k : {1L, 5L, 12L, 25L}) {
    for (long ky = 0; ky <= k; ++ky) {
      for (double alpha : {0.01, 0.05}) {
        const double ours = frs::beta_lower_bound(ky, k, alpha);
        const double oracle = binomial_tail_lower_bound(ky, k, alpha);
        CHECK(std::fabs(ours - oracle) < 1e-9);
      }
    }
  }
}

TEST_CASE("beta_lower_bound is monotone in k_y and anti-monotone in alpha") {
  double prev = -1.0;
  for (long ky = 0; ky <= 20; ++ky) {
    const double p = frs::beta_lower_bound(ky, 20, 0.05);
    CHECK(p >= prev);
    prev = p;
  }
  CHECK(frs::beta_lower_bound(15, 20, 0.01) <= frs::beta_lower_bound(15, 20, 0.05));
}

TEST_CASE("delta_bound examples") {
  CHECK(frs::delta_bound(1.0, 7) == 0.0);
  CHECK(frs::delta_bound(0.42, 0) == 0.0);
  CHECK(frs::delta_bound(0.9, 3) == doctest::Approx(0.271).epsilon(1e-12));
}

TEST_CASE("certified radius: worked example and edge cases") {
  CHECK(frs::max_certified_budget(0.5, 0.9, 1.0) == 0);
  CHECK(frs::max_certified_budget(0.4, 0.9, 1.0) == 0);

  const auto result = frs::certified_radius(0.86, 0.9, 20, 1.0);
  CHECK(result.token_budget == 4);
  CHECK(result.radius == doctest::Approx(0.20));
  // Boundary sanity: 1 - 0.9^4 < 0.36 < 1 - 0.9^5.
  CHECK(frs::delta_bound(0.9, 4) < 0.36);
  CHECK(frs::delta_bound(0.9, 5) > 0.36);

  // Unbounded condition saturates at the sequence length.
  CHECK_FALSE(frs::max_certified_budget(0.9, 0.5, 0.3).has_value());
  CHECK(frs::certified_radius(0.9, 0.5, 12, 0.3).token_budget == 12);
  CHECK(frs::certified_radius(0.9, 0.5, 12, 0.3).radius == 1.0);
}

TEST_CASE("radius solver agrees with a brute-force condition scan") {
  frs::Rng rng(2024);
  for (int round = 0; round < 400; ++round) {
    const double beta = 0.05 + 0.95 * rng.next_double();
    const double p = 0.5 + rng.next_double() * 0.5;
    const double omega = 0.05 + 0.9 * rng.next_double();
    const auto budget = frs::max_certified_budget(p, omega, beta);
    const auto holds = [&](long b) {
      return p - beta * (1.0 - std::pow(omega, static_cast<double>(b))) > 0.5;
    };
    if (!budget) {
      for (long b = 0; b <= 500; ++b) CHECK(holds(b));
      continue;
    }
    if (*budget > 0) CHECK(holds(*budget));
    CHECK_FALSE(holds(*budget + 1));
  }
}

TEST_CASE("radius_ratio: value, limit behavior, domain errors") {
  CHECK(frs::radius_ratio(0.5, 0.9) == doctest::Approx(6.5788).epsilon(1e-4));
  CHECK(frs::radius_ratio(0.899999, 0.9) == doctest::Approx(1.0).epsilon(1e-4));

  frs::Rng rng(5);
  for (int round = 0; round < 1000; ++round) {
    const double high = 0.1 + 0.89 * rng.next_double();
    const double med = high * (0.05 + 0.94 * rng.next_double());
    CHECK(frs::radius_ratio(med, high) > 1.0);
  }

  CHECK_THROWS_AS(frs::radius_ratio(0.0, 0.9), frs::ValidationError);
  CHECK_THROWS_AS(frs::radius_ratio(0.5, 1.0), frs::ValidationError);
  CHECK_THROWS_AS(frs::radius_ratio(0.9, 0.5), frs::ValidationError);
}

TEST_CASE("degenerate constant ensemble certifies its constant label") {
  const auto ensemble = constant_ensemble(20, 0);
  const frs::ModelView view(ensemble);
  frs::FuzzConfig fuzz;
  fuzz.budget = 30;
  fuzz.top_count = 1;
  frs::RandomizationPolicy policy;

  const frs::TokenSeq input{1, 2, 3, 4, 5, 6, 7, 8};
  const Certificate cert = frs::certify_sample(input, ensemble, view, fuzz, policy, 0.05, 1.0,
                                               12, 99, nullptr, false);
  CHECK_FALSE(cert.abstained);
  CHECK(cert.label == 0);
  CHECK(cert.p_lower == doctest::Approx(std::pow(0.05, 1.0 / 20.0)).epsilon(1e-9));
  CHECK(cert.degraded);  // no vulnerable area was supplied
  CHECK(cert.omega == doctest::Approx(policy.omega_medium));
}

TEST_CASE("tied ensembles abstain with zero radius") {
  SmoothedEnsemble ensemble;
  ensemble.members.push_back(constant_model(0));
  ensemble.members.push_back(constant_model(1));
  const frs::ModelView view(ensemble);
  frs::FuzzConfig fuzz;
  frs::RandomizationPolicy policy;

  const Certificate cert = frs::certify_sample({1, 2, 3}, ensemble, view, fuzz, policy, 0.05,
                                               1.0, 12, 7, nullptr, false);
  CHECK(cert.abstained);
  CHECK_FALSE(cert.label.has_value());
  CHECK(cert.certified_token_budget == 0);
  CHECK(cert.certified_radius == 0.0);
}

TEST_CASE("composition: unanimous vote at K=20 certifies budget 4 at omega 0.9") {
  const double p = frs::beta_lower_bound(20, 20, 0.05);
  CHECK(p == doctest::Approx(0.860892).epsilon(1e-6));
  const auto radius = frs::certified_radius(p, 0.9, 20, 1.0);
  CHECK(radius.token_budget == 4);
  CHECK(radius.radius == doctest::Approx(0.20));
}

TEST_CASE("certified budgets hold up under exhaustive perturbation at desk scale") {
  // Tiny task: vocab of 8, sentences of length 8 carrying 6 polarity
  // words, so a single token edit cannot change the true class.
  frs::Vocabulary vocab({"<unk>", "p0", "p1", "n0", "n1", "f0", "f1", "f2"});
  std::vector<frs::LabeledExample> data;
  frs::Rng gen(3);
  for (int i = 0; i < 80; ++i) {
    frs::LabeledExample ex;
    ex.label = i % 2;
    const frs::TokenId a = ex.label == 1 ? 1 : 3;
    const frs::TokenId b = ex.label == 1 ? 2 : 4;
    ex.text = {a, b, a, static_cast<frs::TokenId>(5 + gen.below(3)), b, a,
               static_cast<frs::TokenId>(5 + gen.below(3)), b};
    data.push_back(ex);
  }
  frs::TrainConfig tc;
  tc.learning_rate = 0.5;
  tc.epochs = 200;
  tc.batch_size = 16;
  tc.seed = 6;
  const auto params = frs::pretrain(data, tc, {8, 2, 8, 16});
  const auto tuned = frs::finetune(params, data, tc);
  REQUIRE(frs::accuracy(tuned, data) == 1.0);

  frs::SmoothingConfig scfg;
  scfg.sigma = 0.01;
  scfg.ensemble_size = 8;
  const auto ensemble = frs::make_inference_ensemble(tuned, scfg, 17);
  const frs::ModelView view(tuned);

  frs::FuzzConfig fuzz;
  fuzz.budget = 30;
  fuzz.top_count = 1;
  frs::RandomizationPolicy policy;
  policy.omega_high = 0.9;
  policy.omega_medium = 0.5;
  policy.lambda = 0.3;

  const frs::TokenSeq input = data[0].text;
  const auto cert = frs::certify_sample(input, ensemble, view, fuzz, policy, 0.05, 1.0, 8, 420,
                                        &vocab, true);
  REQUIRE_FALSE(cert.abstained);
  REQUIRE(cert.label == data[0].label);
  REQUIRE(cert.certified_token_budget >= 1);

  // All single-edit neighbors (the certified budget here is 1).
  std::vector<frs::TokenSeq> neighbors;
  const int len = static_cast<int>(input.size());
  for (int p = 0; p < len; ++p) {
    neighbors.push_back(frs::apply_mutation(input, {frs::MutationKind::Delete, p, 0}));
    for (frs::TokenId tok = 1; tok < 8; ++tok)
      neighbors.push_back(frs::apply_mutation(input, {frs::MutationKind::Substitute, p, tok}));
  }
  for (int p = 0; p <= len; ++p)
    for (frs::TokenId tok = 1; tok < 8; ++tok)
      neighbors.push_back(frs::apply_mutation(input, {frs::MutationKind::Insert, p, tok}));
  for (int p = 0; p + 1 < len; ++p)
    neighbors.push_back(frs::apply_mutation(input, {frs::MutationKind::Transpose, p, 0}));

  int stable_trials = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    bool stable = true;
    for (std::size_t j = 0; j < neighbors.size() && stable; ++j) {
      const auto c2 = frs::certify_sample(neighbors[j], ensemble, view, fuzz, policy, 0.05, 1.0,
                                          8, frs::mix_tag(1000 + trial, j), &vocab, true);
      if (!c2.label || *c2.label != *cert.label) stable = false;
    }
    stable_trials += stable;
  }
  // The certificate promises stability with confidence 1 - alpha = 0.95.
  CHECK(stable_trials >= 19);
}

TEST_CASE("radius grows with p_lower and with omega") {
  double prev = -1.0;
  for (double p : {0.55, 0.65, 0.75, 0.85, 0.95}) {
    const auto r = frs::certified_radius(p, 0.9, 50, 1.0);
    CHECK(r.radius >= prev);
    prev = r.radius;
  }
  prev = -1.0;
  for (double omega : {0.55, 0.7, 0.85, 0.95}) {
    const auto r = frs::certified_radius(0.86, omega, 50, 1.0);
    CHECK(r.radius >= prev);
    prev = r.radius;
  }
}
