#include "frs/randomizer.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "frs/distance.hpp"
#include "frs/errors.hpp"
#include "frs/rng.hpp"

namespace frs {

void MutationWeights::validate() const {
  for (double w : {insert, del, substitute, transpose})
    if (w < 0.0 || !std::isfinite(w)) throw ValidationError("mutation weights must be >= 0");
  if (insert + del + substitute + transpose <= 0.0)
    throw ValidationError("mutation weights must not all be zero");
}

void RandomizationPolicy::validate() const {
  if (omega_high <= 0.0 || omega_high > 1.0)
    throw ValidationError("omega_high must lie in (0, 1]");
  if (omega_medium <= 0.0 || omega_medium >= 1.0)
    throw ValidationError("omega_medium must lie in (0, 1)");
  if (omega_low && (*omega_low < 0.0 || *omega_low >= 1.0))
    throw ValidationError("omega_low must lie in [0, 1)");
  if (omega_medium > omega_high)
    throw ValidationError("omega ordering violated: need omega_low <= omega_medium <= omega_high");
  if (omega_low && *omega_low > omega_medium)
    throw ValidationError("omega ordering violated: need omega_low <= omega_medium <= omega_high");
  if (lambda < 0.0 || lambda > 1.0) throw ValidationError("lambda must lie in [0, 1]");
  if (max_retries < 1) throw ValidationError("max_retries must be >= 1");
  mutations.validate();
}

WeightAssignment assign_weights(const TokenSeq& input, const std::vector<Segment>& vulnerable,
                                const RandomizationPolicy& policy) {
  policy.validate();
  const int len = static_cast<int>(input.size());
  WeightAssignment out;
  out.weights.assign(static_cast<std::size_t>(len), policy.omega_medium);

  std::vector<bool> inside(static_cast<std::size_t>(len), false);
  int inside_count = 0;
  for (const Segment& seg : vulnerable) {
    if (seg.start < 0 || seg.end >= len || seg.start > seg.end)
      throw ValidationError("vulnerable segment out of range");
    for (int t = seg.start; t <= seg.end; ++t) {
      if (!inside[static_cast<std::size_t>(t)]) ++inside_count;
      inside[static_cast<std::size_t>(t)] = true;
    }
  }

  if (inside_count == 0 || inside_count == len) {
    // No differential area: conservation forces the uniform probability.
    out.uniform = true;
    out.effective_omega_high = policy.omega_medium;
    out.effective_omega_low = policy.omega_medium;
    return out;
  }

  double high = policy.omega_high;
  double low;
  if (policy.omega_low) {
    low = *policy.omega_low;
  } else {
    // omega_high*|T| + omega_low*(L-|T|) = omega_medium*L
    low = (policy.omega_medium * len - high * inside_count) /
          static_cast<double>(len - inside_count);
    if (low < 0.0) {
      high = policy.omega_medium * len / static_cast<double>(inside_count);
      low = 0.0;
      out.reduced = true;
    }
    low = std::min(low, policy.omega_medium);
  }

  out.effective_omega_high = high;
  out.effective_omega_low = low;
  for (int t = 0; t < len; ++t)
    out.weights[static_cast<std::size_t>(t)] = inside[static_cast<std::size_t>(t)] ? high : low;
  return out;
}

namespace {

MutationKind draw_kind(const MutationWeights& w, bool allow_transpose, Rng& rng) {
  const double total = w.insert + w.del + w.substitute + (allow_transpose ? w.transpose : 0.0);
  double u = rng.next_double() * total;
  if ((u -= w.insert) < 0.0) return MutationKind::Insert;
  if ((u -= w.del) < 0.0) return MutationKind::Delete;
  if ((u -= w.substitute) < 0.0) return MutationKind::Substitute;
  return allow_transpose ? MutationKind::Transpose : MutationKind::Substitute;
}

}  // namespace

SampleDraw generate_randomized_sample(const TokenSeq& input, const std::vector<double>& weights,
                                      const RandomizationPolicy& policy, int vocab_size,
                                      std::uint64_t seed) {
  if (weights.size() != input.size()) throw ValidationError("weight vector length mismatch");
  if (vocab_size < 2) throw ValidationError("vocabulary too small for mutation payloads");
  const int len = static_cast<int>(input.size());
  Rng rng = derive_rng(seed, {stream::kSample});

  SampleDraw draw;
  draw.mutated.assign(static_cast<std::size_t>(len), false);
  for (int pos = 0; pos < len; ++pos)
    draw.mutated[static_cast<std::size_t>(pos)] =
        rng.bernoulli(weights[static_cast<std::size_t>(pos)]);

  std::vector<MutationOp> ops;
  for (int pos = 0; pos < len; ++pos) {
    if (!draw.mutated[static_cast<std::size_t>(pos)]) continue;
    MutationOp op;
    op.kind = draw_kind(policy.mutations, pos + 1 < len, rng);
    op.position = pos;
    if (op.kind == MutationKind::Insert || op.kind == MutationKind::Substitute)
      op.payload = 1 + static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(vocab_size - 1)));
    ops.push_back(op);
  }

  // Right-to-left application keeps every op's original index valid.
  draw.seq = input;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    if (it->kind == MutationKind::Transpose &&
        it->position + 1 >= static_cast<int>(draw.seq.size()))
      continue;  // right neighbor was deleted; nothing to swap
    draw.seq = apply_mutation(draw.seq, *it);
  }
  return draw;
}

RandomizedSet generate_smoothing_set(const TokenSeq& input,
                                     const std::vector<Segment>& vulnerable,
                                     const RandomizationPolicy& policy, int count, int vocab_size,
                                     std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample count must be >= 1");
  RandomizedSet set;
  set.source = input;
  set.assignment = assign_weights(input, vulnerable, policy);
  set.samples.reserve(static_cast<std::size_t>(count));

  for (int slot = 0; slot < count; ++slot) {
    bool accepted = false;
    for (int attempt = 0; attempt < policy.max_retries && !accepted; ++attempt) {
      SampleDraw draw = generate_randomized_sample(
          input, set.assignment.weights, policy, vocab_size,
          mix_tag(mix_tag(seed, static_cast<std::uint64_t>(slot)),
                  static_cast<std::uint64_t>(attempt)));
      if (normalized_dl(draw.seq, input) <= policy.lambda) {
        set.samples.push_back(std::move(draw.seq));
        set.mutated_masks.push_back(std::move(draw.mutated));
        set.fallback.push_back(false);
        accepted = true;
      }
    }
    if (!accepted) {
      set.samples.push_back(input);
      set.mutated_masks.emplace_back(input.size(), false);
      set.fallback.push_back(true);
      ++set.fallback_count;
    }
  }
  return set;
}

void dump_randomized_set(const RandomizedSet& set, std::ostream& out) {
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    nlohmann::json rec;
    rec["slot"] = i;
    rec["sample"] = set.samples[i];
    rec["distance"] = normalized_dl(set.samples[i], set.source);
    rec["fallback"] = static_cast<bool>(set.fallback[i]);
    out << rec.dump() << '\n';
  }
}

}  // namespace frs
