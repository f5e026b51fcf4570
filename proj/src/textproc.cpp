#include "licvar/textproc.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

#include "licvar/fingerprint.hpp"

namespace licvar {

namespace {

constexpr std::array<std::string_view, 36> kAbbreviations = {
    "sec",  "secs", "e.g", "i.e",  "etc", "inc", "ltd",  "no",  "nos", "vs",
    "v",    "mr",   "mrs", "ms",   "dr",  "st",  "co",   "corp", "seq", "cf",
    "al",   "approx", "art", "para", "u.s", "u.s.a", "fig", "vol", "pp", "p",
    "ch",   "cl",   "subsec", "incl", "viz", "esp",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::pair<std::size_t, std::size_t> trim(std::string_view doc, std::size_t b, std::size_t e) {
  while (b < e && is_space(doc[b])) ++b;
  while (e > b && is_space(doc[e - 1])) --e;
  return {b, e};
}

bool is_roman(std::string_view s) {
  return !s.empty() && s.size() <= 5 &&
         std::all_of(s.begin(), s.end(), [](char c) {
           c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
           return c == 'i' || c == 'v' || c == 'x';
         });
}

// "1", "2.1", "a", "iv": tokens that number a list item or section.
bool is_enumerator(std::string_view tok) {
  if (tok.empty()) return false;
  if (tok.size() == 1 && std::isalpha(static_cast<unsigned char>(tok[0]))) return true;
  if (is_roman(tok)) return true;
  bool digit_seen = false;
  for (char c : tok) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit_seen = true;
    } else if (c != '.') {
      return false;
    }
  }
  return digit_seen && tok.size() <= 8;
}

// Length of a list marker at the start of `s` (after leading whitespace was
// skipped), including the whitespace that follows it, or 0.
std::size_t list_marker_length(std::string_view s) {
  if (s.empty()) return 0;
  auto followed_by_space = [&](std::size_t n) -> std::size_t {
    return (n < s.size() && is_space(s[n])) ? n : 0;
  };
  if (s[0] == '-' || s[0] == '*') return followed_by_space(1);
  if (s.rfind("\xE2\x80\xA2", 0) == 0) return followed_by_space(3);  // bullet
  std::size_t i = 0;
  const bool paren = s[0] == '(';
  if (paren) ++i;
  std::size_t start = i;
  while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '.') && i - start < 8) ++i;
  if (i == start || i >= s.size()) return 0;
  std::string_view tok = s.substr(start, i - start);
  const bool trailing_dot = tok.back() == '.';
  if (trailing_dot) tok.remove_suffix(1);
  if (!is_enumerator(tok)) return 0;
  if (paren) {
    if (s[i] != ')') return 0;
    return followed_by_space(i + 1);
  }
  if (s[i] == ')') return followed_by_space(i + 1);
  if (trailing_dot) return followed_by_space(i);
  return 0;
}

bool starts_clause(std::string_view doc, std::size_t k, std::size_t e) {
  if (k >= e) return false;
  const auto c = static_cast<unsigned char>(doc[k]);
  if (std::isupper(c) || std::isdigit(c)) return true;
  std::string_view rest = doc.substr(k, e - k);
  if (list_marker_length(rest) > 0) return true;
  if ((c == '"' || c == '\'' || c == '(') && k + 1 < e &&
      std::isupper(static_cast<unsigned char>(doc[k + 1]))) {
    return true;
  }
  if (rest.rfind("\xE2\x80\x9C", 0) == 0 || rest.rfind("\xE2\x80\xA2", 0) == 0) return true;
  return false;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Whether the '.' at `p` ends a sentence, judged by the token before it.
bool period_is_protected(std::string_view doc, std::size_t unit_start, std::size_t p) {
  std::size_t t = p;
  while (t > unit_start && !is_space(doc[t - 1]) && doc[t - 1] != '(') --t;
  std::string_view tok = doc.substr(t, p - t);
  while (!tok.empty() && (tok.front() == '"' || tok.front() == '\'')) tok.remove_prefix(1);
  if (tok.empty()) return false;
  const std::string low = lower(tok);
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), low) != kAbbreviations.end()) return true;
  // Single capital initial ("J. Smith").
  if (tok.size() == 1 && std::isupper(static_cast<unsigned char>(tok[0]))) return true;
  // Enumerator that opens the unit: "1. Definitions", "2.1. Grants".
  bool at_start = true;
  for (std::size_t i = unit_start; i < t; ++i) {
    if (!is_space(doc[i]) && doc[i] != '(') {
      at_start = false;
      break;
    }
  }
  return at_start && is_enumerator(tok);
}

std::size_t skip_closers(std::string_view doc, std::size_t j, std::size_t e) {
  while (j < e) {
    const char c = doc[j];
    if (c == ')' || c == '"' || c == '\'' || c == ']') {
      ++j;
    } else if (doc.substr(j).rfind("\xE2\x80\x9D", 0) == 0 || doc.substr(j).rfind("\xE2\x80\x99", 0) == 0) {
      j += 3;
    } else {
      break;
    }
  }
  return std::min(j, e);
}

struct Block {
  std::size_t begin;
  std::size_t end;
};

std::vector<Block> split_blocks(std::string_view doc) {
  std::vector<Block> blocks;
  std::optional<Block> current;
  std::size_t pos = 0;
  while (pos < doc.size()) {
    std::size_t eol = doc.find('\n', pos);
    if (eol == std::string_view::npos) eol = doc.size();
    auto [lb, le] = trim(doc, pos, eol);
    if (lb == le) {
      if (current) blocks.push_back(*current);
      current.reset();
    } else if (list_marker_length(doc.substr(lb, le - lb)) > 0) {
      if (current) blocks.push_back(*current);
      current = Block{lb, le};
    } else if (current) {
      current->end = le;
    } else {
      current = Block{lb, le};
    }
    pos = eol + 1;
  }
  if (current) blocks.push_back(*current);
  return blocks;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

bool is_heading(std::string_view block) {
  if (block.find('\n') != std::string_view::npos) return false;
  const std::size_t words = word_count(block);
  if (words > 12) return false;
  const char last = block.back();
  if (last == ';' || last == ',' || last == ':') return false;
  if (last == '.' || last == '!' || last == '?') return words <= 6;
  return true;
}

struct RawUnit {
  std::size_t begin;
  std::size_t end;
  bool heading;
};

}  // namespace

std::vector<SentenceUnit> segment(std::string_view doc) {
  std::vector<RawUnit> raw;
  for (const Block& block : split_blocks(doc)) {
    const std::string_view text = doc.substr(block.begin, block.end - block.begin);
    if (is_heading(text)) {
      raw.push_back({block.begin, block.end, true});
      continue;
    }
    std::size_t unit_start = block.begin;
    for (std::size_t p = block.begin; p < block.end; ++p) {
      const char c = doc[p];
      if (c != '.' && c != '!' && c != '?' && c != ';') continue;
      const std::size_t j = skip_closers(doc, p + 1, block.end);
      if (j >= block.end || !is_space(doc[j])) continue;
      std::size_t k = j;
      while (k < block.end && is_space(doc[k])) ++k;
      if (!starts_clause(doc, k, block.end)) continue;
      if (c == '.' && period_is_protected(doc, unit_start, p)) continue;
      raw.push_back({unit_start, j, false});
      unit_start = k;
      p = k - 1;
    }
    auto [b, e] = trim(doc, unit_start, block.end);
    if (b < e) raw.push_back({b, e, false});
  }

  std::vector<SentenceUnit> units;
  std::optional<std::size_t> pending_begin;
  for (const RawUnit& r : raw) {
    std::string norm = normalized_string(doc.substr(r.begin, r.end - r.begin));
    if (norm.empty()) {
      if (!units.empty()) {
        SentenceUnit& prev = units.back();
        prev.end = r.end;
        prev.text = std::string(doc.substr(prev.begin, prev.end - prev.begin));
      } else if (!pending_begin) {
        pending_begin = r.begin;
      }
      continue;
    }
    SentenceUnit u;
    u.begin = pending_begin.value_or(r.begin);
    pending_begin.reset();
    u.end = r.end;
    u.text = std::string(doc.substr(u.begin, u.end - u.begin));
    u.normalized = std::move(norm);
    u.heading = r.heading;
    units.push_back(std::move(u));
  }

  std::optional<std::string> hint;
  for (std::size_t i = 0; i < units.size(); ++i) {
    units[i].index = i;
    units[i].section_hint = hint;
    if (units[i].heading) hint = units[i].text;
  }
  return units;
}

SentenceDiff diff_sentences(const std::vector<SentenceUnit>& candidate,
                            const std::vector<SentenceUnit>& standard) {
  // Intern normalized sentences so the DP compares integers.
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](const std::vector<SentenceUnit>& units) {
    std::vector<int> out;
    out.reserve(units.size());
    for (const auto& u : units) {
      auto [it, _] = ids.emplace(u.normalized, static_cast<int>(ids.size()));
      out.push_back(it->second);
    }
    return out;
  };
  const std::vector<int> a = intern(candidate);
  const std::vector<int> b = intern(standard);

  SentenceDiff diff;
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
    diff.matched.emplace_back(prefix, prefix);
    ++prefix;
  }
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }

  const std::size_t n = a.size() - prefix - suffix;
  const std::size_t m = b.size() - prefix - suffix;
  // lcs[i][j] = LCS length of a[prefix+i..] and b[prefix+j..] within the middle.
  std::vector<std::uint32_t> lcs((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return lcs[i * (m + 1) + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      at(i, j) = a[prefix + i] == b[prefix + j] ? at(i + 1, j + 1) + 1
                                                : std::max(at(i + 1, j), at(i, j + 1));
    }
  }
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n && j < m) {
    if (a[prefix + i] == b[prefix + j]) {
      diff.matched.emplace_back(prefix + i, prefix + j);
      ++i;
      ++j;
    } else if (at(i + 1, j) >= at(i, j + 1)) {
      diff.candidate_only.push_back(prefix + i);
      ++i;
    } else {
      diff.standard_only.push_back(prefix + j);
      ++j;
    }
  }
  for (; i < n; ++i) diff.candidate_only.push_back(prefix + i);
  for (; j < m; ++j) diff.standard_only.push_back(prefix + j);
  for (std::size_t s = 0; s < suffix; ++s) {
    diff.matched.emplace_back(a.size() - suffix + s, b.size() - suffix + s);
  }
  return diff;
}

}  // namespace licvar
