#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace licvar {

struct SentenceUnit {
  std::string text;        // original text, trimmed
  std::string normalized;  // normalize(text), never empty
  std::size_t index = 0;   // position in the document
  std::optional<std::string> section_hint;  // closest preceding heading
  std::size_t begin = 0;   // byte range in the source document
  std::size_t end = 0;
  bool heading = false;
  friend bool operator==(const SentenceUnit&, const SentenceUnit&) = default;
};

// Splits license prose into self-contained units: sentences, clauses ending
// in ';' that are followed by a new clause, list items, and headings.
// Punctuation-only fragments are folded into a neighbouring unit so the
// units cover the whole document.
std::vector<SentenceUnit> segment(std::string_view doc);

struct SentenceDiff {
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (candidate, standard)
  std::vector<std::size_t> candidate_only;
  std::vector<std::size_t> standard_only;
};

// Exact alignment of normalized sentences by longest common subsequence.
SentenceDiff diff_sentences(const std::vector<SentenceUnit>& candidate,
                            const std::vector<SentenceUnit>& standard);

}  // namespace licvar
