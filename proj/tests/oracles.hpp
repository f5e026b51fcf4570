#pragma once

// Brute-force reference implementations used as test oracles.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace licvar::oracle {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Rescans every window from scratch.
inline std::set<std::uint64_t> winnow(const std::string& normalized, std::size_t k, std::size_t w) {
  std::vector<std::uint64_t> h;
  for (std::size_t i = 0; i + k <= normalized.size(); ++i) h.push_back(fnv1a(normalized.substr(i, k)));
  std::set<std::uint64_t> out;
  if (h.empty()) return out;
  if (h.size() <= w) {
    out.insert(*std::min_element(h.begin(), h.end()));
    return out;
  }
  for (std::size_t start = 0; start + w <= h.size(); ++start) {
    std::size_t best = start;
    for (std::size_t j = start + 1; j < start + w; ++j) {
      if (h[j] < h[best]) best = j;
    }
    out.insert(h[best]);
  }
  return out;
}

// Length of the longest common subsequence, by the textbook table.
template <typename T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

// Lowercase words over a small alphabet so random strings share k-grams.
inline std::string random_text(std::mt19937& rng, std::size_t min_len, std::size_t max_len) {
  static const std::string alphabet = "abcde xyz";
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s(len(rng), 'a');
  for (char& c : s) c = alphabet[pick(rng)];
  return s;
}

}  // namespace licvar::oracle
