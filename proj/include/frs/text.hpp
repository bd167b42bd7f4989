#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "frs/errors.hpp"

namespace frs {

using TokenId = std::int32_t;

// Out-of-vocabulary sentinel; always id 0.
inline constexpr TokenId kOovId = 0;

// An ordered sequence of token ids over a finite vocabulary.
using TokenSeq = std::vector<TokenId>;

// Inclusive token index range [start, end] within an owning sequence.
struct Segment {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool contains(int index) const { return index >= start && index <= end; }
  bool contains(const Segment& other) const {
    return start <= other.start && other.end <= end;
  }
  bool operator==(const Segment&) const = default;
};

enum class MutationKind { Insert, Delete, Substitute, Transpose };

// One token-level edit. Insert/Substitute carry the payload token;
// Transpose swaps position and position+1.
struct MutationOp {
  MutationKind kind = MutationKind::Substitute;
  int position = 0;
  TokenId payload = kOovId;
};

// Token table: id 0 is the OOV sentinel, ids follow vocabulary-file line order.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  TokenId id_of(const std::string& token) const;
  const std::string& token_of(TokenId id) const;
  bool is_punct(TokenId id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

 private:
  std::vector<std::string> tokens_;
  std::vector<bool> punct_;
  std::unordered_map<std::string, TokenId> index_;
};

// Lower-cases, splits on whitespace, and detaches punctuation characters as
// separate tokens. Unknown tokens map to the OOV id.
TokenSeq tokenize(const std::string& text, const Vocabulary& vocab);
std::vector<std::string> tokenize_words(const std::string& text);

std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab);

// Applies a single edit, returning a new sequence; the input is not modified.
// Out-of-range positions raise ValidationError.
TokenSeq apply_mutation(const TokenSeq& seq, const MutationOp& op);

// Candidate (left, right) subdivisions of `seg`, one pair per split point
// k in {start, ..., end-1}: ((start,k), (k+1,end)). Pairs are ordered
// punctuation-adjacent splits first, then midpoint-outward; empty for
// single-token segments. `vocab` may be null (no punctuation priority).
std::vector<std::pair<Segment, Segment>> split_segment(const TokenSeq& seq, const Segment& seg,
                                                       const Vocabulary* vocab = nullptr);

}  // namespace frs
