#include "frs/certify.hpp"

#include <algorithm>
#include <cmath>

#include "frs/errors.hpp"
#include "frs/rng.hpp"

namespace frs {

VoteResult majority_vote(const std::vector<int>& predictions, int label_count) {
  if (predictions.empty()) throw ValidationError("cannot vote over zero predictions");
  VoteResult result;
  result.counts.assign(static_cast<std::size_t>(label_count), 0);
  for (int label : predictions) {
    if (label < 0 || label >= label_count) throw ValidationError("vote label out of range");
    ++result.counts[static_cast<std::size_t>(label)];
  }
  result.total = static_cast<long>(predictions.size());
  const auto it = std::max_element(result.counts.begin(), result.counts.end());
  const long best = *it;
  if (std::count(result.counts.begin(), result.counts.end(), best) == 1)
    result.winner = static_cast<int>(it - result.counts.begin());
  return result;
}

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double beta_cont_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cont_fraction(a, b, x) / a;
  return 1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b;
}

double beta_lower_bound(long k_y, long k, double alpha) {
  if (k < 1 || k_y < 0 || k_y > k) throw ValidationError("invalid vote counts");
  if (alpha <= 0.0 || alpha >= 1.0) throw ValidationError("alpha must lie in (0, 1)");
  if (k_y == 0) return 0.0;
  const double a = static_cast<double>(k_y);
  const double b = static_cast<double>(k - k_y) + 1.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (reg_incomplete_beta(a, b, mid) < alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double delta_bound(double omega, long token_budget) {
  if (omega < 0.0 || omega > 1.0) throw ValidationError("omega must lie in [0, 1]");
  if (token_budget < 0) throw ValidationError("token budget must be nonnegative");
  return 1.0 - std::pow(omega, static_cast<double>(token_budget));
}

std::optional<long> max_certified_budget(double p_lower, double omega, double beta) {
  if (omega <= 0.0 || omega > 1.0) throw ValidationError("omega must lie in (0, 1]");
  if (beta <= 0.0 || beta > 1.0) throw ValidationError("beta must lie in (0, 1]");
  if (!(p_lower > 0.5)) return 0;

  const auto holds = [&](long b) {
    return p_lower - beta * (1.0 - std::pow(omega, static_cast<double>(b))) > 0.5;
  };
  // The condition tends to p_lower - beta as the budget grows, so it never
  // fails when p_lower - beta >= 0.5 (and omega = 1 keeps it at p_lower).
  if (p_lower - beta >= 0.5 || omega == 1.0) return std::nullopt;

  const double arg = 1.0 - (p_lower - 0.5) / beta;
  long budget =
      std::max<long>(0, static_cast<long>(std::ceil(std::log(arg) / std::log(omega))) - 1);
  while (holds(budget + 1)) ++budget;
  while (budget > 0 && !holds(budget)) --budget;
  return budget;
}

RadiusResult certified_radius(double p_lower, double omega, long length, double beta) {
  if (length < 1) throw ValidationError("sequence length must be >= 1");
  const std::optional<long> budget = max_certified_budget(p_lower, omega, beta);
  RadiusResult result;
  result.token_budget = budget ? std::min(*budget, length) : length;
  result.radius = static_cast<double>(result.token_budget) / static_cast<double>(length);
  return result;
}

double radius_ratio(double omega_medium, double omega_high) {
  if (!(omega_medium > 0.0) || !(omega_high < 1.0) || !(omega_medium < omega_high))
    throw ValidationError("radius ratio requires 0 < omega_medium < omega_high < 1");
  return std::log(omega_medium) / std::log(omega_high);
}

Certificate certify_sample(const TokenSeq& input, const SmoothedEnsemble& ensemble,
                           const ModelView& fuzz_view, const FuzzConfig& fuzz,
                           const RandomizationPolicy& policy, double alpha, double beta,
                           int vocab_size, std::uint64_t sample_seed, const Vocabulary* vocab,
                           bool run_fuzzer, std::ostream* fuzz_trace) {
  if (ensemble.members.empty()) throw ValidationError("empty ensemble");
  if (input.empty()) throw ValidationError("cannot certify an empty input");
  const int label_count = ensemble.members.front().label_count;

  Certificate cert;
  cert.beta = beta;
  cert.confidence = 1.0 - alpha;

  if (run_fuzzer) {
    FuzzConfig fcfg = fuzz;
    fcfg.seed = mix_tag(sample_seed, stream::kFuzz);
    cert.vulnerable =
        identify_vulnerable(input, fuzz_view, fcfg, vocab_size, vocab, FuzzTraceSink{fuzz_trace});
  }
  cert.degraded = cert.vulnerable.empty();

  RandomizedSet set =
      generate_smoothing_set(input, cert.vulnerable, policy, ensemble.size(), vocab_size,
                             mix_tag(sample_seed, stream::kSample));
  cert.fallback_count = set.fallback_count;
  cert.omega = set.assignment.uniform ? policy.omega_medium : set.assignment.effective_omega_high;

  std::vector<int> predictions;
  predictions.reserve(set.samples.size());
  for (std::size_t k = 0; k < set.samples.size(); ++k)
    predictions.push_back(predict_label(ensemble.members[k], set.samples[k]));
  const VoteResult vote = majority_vote(predictions, label_count);
  cert.vote_counts = vote.counts;

  if (!vote.winner) return cert;  // tied: abstain with zero radius
  cert.label = vote.winner;
  cert.p_lower =
      beta_lower_bound(vote.counts[static_cast<std::size_t>(*vote.winner)], vote.total, alpha);
  if (!(cert.p_lower > 0.5)) return cert;

  cert.abstained = false;
  const RadiusResult radius =
      certified_radius(cert.p_lower, cert.omega, static_cast<long>(input.size()), beta);
  cert.certified_token_budget = radius.token_budget;
  cert.certified_radius = radius.radius;
  cert.delta = delta_bound(cert.omega, radius.token_budget);
  return cert;
}

}  // namespace frs
