#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>

#include "frs/distance.hpp"

using frs::TokenSeq;

namespace {

// Independent oracle: breadth-first search over the edit graph (insert,
// delete, substitute, adjacent transpose) restricted to sequences over
// {1..alphabet} no longer than max_len. True shortest paths by construction.
class EditGraphOracle {
 public:
  EditGraphOracle(int alphabet, int max_len) : alphabet_(alphabet), max_len_(max_len) {}

  std::size_t distance(const TokenSeq& from, const TokenSeq& to) {
    const auto& dist = bfs_from(from);
    const auto it = dist.find(to);
    REQUIRE(it != dist.end());
    return it->second;
  }

 private:
  const std::map<TokenSeq, std::size_t>& bfs_from(const TokenSeq& source) {
    auto cached = cache_.find(source);
    if (cached != cache_.end()) return cached->second;

    std::map<TokenSeq, std::size_t> dist;
    std::deque<TokenSeq> queue;
    dist[source] = 0;
    queue.push_back(source);
    while (!queue.empty()) {
      const TokenSeq cur = queue.front();
      queue.pop_front();
      const std::size_t d = dist[cur];
      const auto visit = [&](TokenSeq next) {
        if (!dist.count(next)) {
          dist[next] = d + 1;
          queue.push_back(std::move(next));
        }
      };
      const int len = static_cast<int>(cur.size());
      if (len < max_len_ + 2) {  // slack for paths through longer sequences
        for (int pos = 0; pos <= len; ++pos)
          for (int tok = 1; tok <= alphabet_; ++tok) {
            TokenSeq next = cur;
            next.insert(next.begin() + pos, tok);
            visit(std::move(next));
          }
      }
      for (int pos = 0; pos < len; ++pos) {
        TokenSeq next = cur;
        next.erase(next.begin() + pos);
        visit(std::move(next));
      }
      for (int pos = 0; pos < len; ++pos)
        for (int tok = 1; tok <= alphabet_; ++tok) {
          if (cur[static_cast<std::size_t>(pos)] == tok) continue;
          TokenSeq next = cur;
          next[static_cast<std::size_t>(pos)] = tok;
          visit(std::move(next));
        }
      for (int pos = 0; pos + 1 < len; ++pos) {
        TokenSeq next = cur;
        std::swap(next[static_cast<std::size_t>(pos)], next[static_cast<std::size_t>(pos) + 1]);
        visit(std::move(next));
      }
    }
    return cache_.emplace(source, std::move(dist)).first->second;
  }

  int alphabet_;
  int max_len_;
  std::map<TokenSeq, std::map<TokenSeq, std::size_t>> cache_;
};

std::vector<TokenSeq> all_sequences(int alphabet, int max_len) {
  std::vector<TokenSeq> out = {{}};
  std::vector<TokenSeq> frontier = {{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& seq : frontier)
      for (int tok = 1; tok <= alphabet; ++tok) {
        TokenSeq grown = seq;
        grown.push_back(tok);
        next.push_back(grown);
        out.push_back(std::move(grown));
      }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("dl_distance matches the stated examples") {
  CHECK(frs::dl_distance({5, 9}, {5, 9}) == 0);
  CHECK(frs::dl_distance({1, 2}, {2, 1}) == 1);
  CHECK(frs::dl_distance({1, 2, 3, 4}, {1, 5, 3, 4}) == 1);
  CHECK(frs::dl_distance({}, {}) == 0);
  CHECK(frs::dl_distance({}, {1, 2, 3}) == 3);
  CHECK(frs::dl_distance({1}, {1, 2, 3, 4}) == 3);
}

TEST_CASE("unrestricted variant beats optimal string alignment where they differ") {
  // "ca" -> "abc": OSA gives 3, the true metric distance is 2
  // (transpose to "ac", insert "b").
  CHECK(frs::dl_distance({3, 1}, {1, 2, 3}) == 2);
}

TEST_CASE("normalized_dl examples and range") {
  CHECK(frs::normalized_dl({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}) == 0.0);
  CHECK(frs::normalized_dl({1, 2, 3, 4}, {1, 9, 3, 4}) == doctest::Approx(0.25));
  CHECK(frs::normalized_dl({1}, {1, 2, 3, 4}) == doctest::Approx(0.75));
  CHECK(frs::normalized_dl({}, {}) == 0.0);
  CHECK(frs::normalized_dl({}, {7}) == 1.0);
}

TEST_CASE("dl_distance equals exhaustive edit search on length <= 4, alphabet 3") {
  const auto sequences = all_sequences(3, 4);
  REQUIRE(sequences.size() == 121);
  EditGraphOracle oracle(3, 4);

  std::vector<std::vector<std::size_t>> dist(sequences.size(),
                                             std::vector<std::size_t>(sequences.size()));
  for (std::size_t i = 0; i < sequences.size(); ++i)
    for (std::size_t j = 0; j < sequences.size(); ++j) {
      dist[i][j] = frs::dl_distance(sequences[i], sequences[j]);
      CHECK(dist[i][j] == oracle.distance(sequences[i], sequences[j]));
    }

  SUBCASE("metric axioms hold on the same corpus") {
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      CHECK(dist[i][i] == 0);
      for (std::size_t j = i + 1; j < sequences.size(); ++j) {
        CHECK(dist[i][j] == dist[j][i]);
        CHECK(dist[i][j] >= 1);  // distinct sequences
      }
    }
    for (std::size_t i = 0; i < sequences.size(); ++i)
      for (std::size_t j = 0; j < sequences.size(); ++j)
        for (std::size_t k = 0; k < sequences.size(); ++k)
          CHECK(dist[i][k] <= dist[i][j] + dist[j][k]);
  }

  SUBCASE("bracketed by Levenshtein") {
    for (std::size_t i = 0; i < sequences.size(); ++i)
      for (std::size_t j = 0; j < sequences.size(); ++j) {
        const std::size_t lev = frs::levenshtein_distance(sequences[i], sequences[j]);
        CHECK(dist[i][j] <= lev);
        CHECK(lev <= 2 * dist[i][j]);
      }
  }

  SUBCASE("normalization stays in [0,1]; 1 exactly when nothing aligns") {
    for (std::size_t i = 0; i < sequences.size(); ++i)
      for (std::size_t j = 0; j < sequences.size(); ++j) {
        if (sequences[i].empty() && sequences[j].empty()) continue;
        const double norm = frs::normalized_dl(sequences[i], sequences[j]);
        CHECK(norm >= 0.0);
        CHECK(norm <= 1.0);
        const std::size_t max_len = std::max(sequences[i].size(), sequences[j].size());
        CHECK((norm == 1.0) == (dist[i][j] == max_len));
      }
  }
}
