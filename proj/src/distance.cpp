#include "frs/distance.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

namespace frs {

std::size_t dl_distance(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t la = a.size();
  const std::size_t lb = b.size();
  if (la == 0) return lb;
  if (lb == 0) return la;

  // Lowrance-Wagner DP with a sentinel border row/column. d[i+1][j+1] holds
  // the distance between a[0..i) and b[0..j); last_row_of maps a token to the
  // most recent row in `a` where it occurred, enabling non-adjacent
  // transposition chains.
  const std::size_t max_dist = la + lb;
  std::vector<std::vector<std::size_t>> d(la + 2, std::vector<std::size_t>(lb + 2, 0));
  d[0][0] = max_dist;
  for (std::size_t i = 0; i <= la; ++i) {
    d[i + 1][0] = max_dist;
    d[i + 1][1] = i;
  }
  for (std::size_t j = 0; j <= lb; ++j) {
    d[0][j + 1] = max_dist;
    d[1][j + 1] = j;
  }

  std::unordered_map<TokenId, std::size_t> last_row_of;
  for (std::size_t i = 1; i <= la; ++i) {
    std::size_t last_col = 0;  // last column in b matching a[i-1]
    for (std::size_t j = 1; j <= lb; ++j) {
      const std::size_t row = last_row_of.count(b[j - 1]) ? last_row_of[b[j - 1]] : 0;
      const std::size_t col = last_col;
      std::size_t cost = 1;
      if (a[i - 1] == b[j - 1]) {
        cost = 0;
        last_col = j;
      }
      d[i + 1][j + 1] = std::min({
          d[i][j] + cost,                                    // substitute / match
          d[i + 1][j] + 1,                                   // insert
          d[i][j + 1] + 1,                                   // delete
          d[row][col] + (i - row - 1) + 1 + (j - col - 1),   // transpose
      });
    }
    last_row_of[a[i - 1]] = i;
  }
  return d[la + 1][lb + 1];
}

std::size_t levenshtein_distance(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t la = a.size();
  const std::size_t lb = b.size();
  std::vector<std::size_t> prev(lb + 1), cur(lb + 1);
  for (std::size_t j = 0; j <= lb; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= la; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= lb; ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      cur[j] = std::min({prev[j - 1] + cost, cur[j - 1] + 1, prev[j] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[lb];
}

double normalized_dl(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t denom = std::max(a.size(), b.size());
  if (denom == 0) return 0.0;
  return static_cast<double>(dl_distance(a, b)) / static_cast<double>(denom);
}

}  // namespace frs
