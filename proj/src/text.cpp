#include "frs/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace frs {

namespace {

bool all_punct(const std::string& tok) {
  if (tok.empty()) return false;
  return std::all_of(tok.begin(), tok.end(),
                     [](unsigned char c) { return std::ispunct(c) != 0; });
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"<unk>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw ValidationError("vocabulary must contain the OOV sentinel");
  punct_.resize(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    punct_[i] = all_punct(tokens_[i]);
    index_.emplace(tokens_[i], static_cast<TokenId>(i));
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vocabulary file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot write vocabulary file: " + path);
  for (const auto& tok : tokens_) out << tok << '\n';
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kOovId : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id < 0 || id >= size()) throw ValidationError("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::is_punct(TokenId id) const {
  if (id < 0 || id >= size()) return false;
  return punct_[static_cast<std::size_t>(id)];
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      words.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return words;
}

TokenSeq tokenize(const std::string& text, const Vocabulary& vocab) {
  TokenSeq seq;
  for (const auto& word : tokenize_words(text)) seq.push_back(vocab.id_of(word));
  return seq;
}

std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab) {
  std::ostringstream out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i > 0) out << ' ';
    out << vocab.token_of(seq[i]);
  }
  return out.str();
}

TokenSeq apply_mutation(const TokenSeq& seq, const MutationOp& op) {
  const int len = static_cast<int>(seq.size());
  TokenSeq out = seq;
  switch (op.kind) {
    case MutationKind::Insert:
      if (op.position < 0 || op.position > len)
        throw ValidationError("insert position out of range");
      out.insert(out.begin() + op.position, op.payload);
      return out;
    case MutationKind::Delete:
      if (op.position < 0 || op.position >= len)
        throw ValidationError("delete position out of range");
      out.erase(out.begin() + op.position);
      return out;
    case MutationKind::Substitute:
      if (op.position < 0 || op.position >= len)
        throw ValidationError("substitute position out of range");
      out[static_cast<std::size_t>(op.position)] = op.payload;
      return out;
    case MutationKind::Transpose:
      if (op.position < 0 || op.position + 1 >= len)
        throw ValidationError("transpose position out of range");
      std::swap(out[static_cast<std::size_t>(op.position)],
                out[static_cast<std::size_t>(op.position) + 1]);
      return out;
  }
  throw ValidationError("unknown mutation kind");
}

std::vector<std::pair<Segment, Segment>> split_segment(const TokenSeq& seq, const Segment& seg,
                                                       const Vocabulary* vocab) {
  const int len = static_cast<int>(seq.size());
  if (seg.start < 0 || seg.end < seg.start || seg.end >= len)
    throw ValidationError("segment out of range");
  if (seg.start == seg.end) return {};

  // Midpoint-outward order over split points: mid, mid+1, mid-1, mid+2, ...
  const int mid = (seg.start + seg.end) / 2;
  std::vector<int> order;
  order.push_back(mid);
  for (int step = 1; order.size() < static_cast<std::size_t>(seg.length() - 1); ++step) {
    if (mid + step <= seg.end - 1) order.push_back(mid + step);
    if (mid - step >= seg.start) order.push_back(mid - step);
  }

  // Splits next to punctuation approximate phrase boundaries; they go first.
  if (vocab != nullptr) {
    std::stable_partition(order.begin(), order.end(), [&](int k) {
      return vocab->is_punct(seq[static_cast<std::size_t>(k)]) ||
             vocab->is_punct(seq[static_cast<std::size_t>(k) + 1]);
    });
  }

  std::vector<std::pair<Segment, Segment>> pairs;
  pairs.reserve(order.size());
  for (int k : order)
    pairs.emplace_back(Segment{seg.start, k}, Segment{k + 1, seg.end});
  return pairs;
}

}  // namespace frs
