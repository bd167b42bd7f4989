#pragma once

#include <cstddef>

#include "frs/text.hpp"

namespace frs {

// Unrestricted Damerau-Levenshtein distance: minimum number of token
// insertions, deletions, substitutions, and adjacent transpositions turning
// `a` into `b`. Unlike optimal string alignment, edits may touch previously
// transposed tokens, which makes this a true metric.
std::size_t dl_distance(const TokenSeq& a, const TokenSeq& b);

// Plain Levenshtein (no transpositions); used for cross-checking bounds.
std::size_t levenshtein_distance(const TokenSeq& a, const TokenSeq& b);

// dl_distance(a, b) / max(|a|, |b|), in [0, 1]. Two empty sequences
// normalize to 0.
double normalized_dl(const TokenSeq& a, const TokenSeq& b);

}  // namespace frs
