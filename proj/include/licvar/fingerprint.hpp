#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace licvar {

// Lowercased text with punctuation turned into separators and whitespace
// collapsed to single spaces. offsets[i] is the byte offset in the original
// text of normalized byte i.
struct NormalizedText {
  std::string text;
  std::vector<std::size_t> offsets;
};

NormalizedText normalize(std::string_view raw);
// Convenience: just the normalized string.
std::string normalized_string(std::string_view raw);

struct WinnowParams {
  std::size_t k = 8;  // k-gram length in normalized bytes
  std::size_t w = 4;  // window size in k-grams
  friend bool operator==(const WinnowParams&, const WinnowParams&) = default;
};

struct FingerprintSet {
  std::set<std::uint64_t> signatures;
  WinnowParams params;
  friend bool operator==(const FingerprintSet&, const FingerprintSet&) = default;
};

// 64-bit FNV-1a over the given bytes. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes);

// Hash of every k-gram of `text`, in order.
std::vector<std::uint64_t> kgram_hashes(std::string_view text, std::size_t k);

// Winnowing: minimum k-gram hash of every window of w consecutive k-grams,
// leftmost minimum on ties. When there are fewer than w k-grams, the single
// partial window is used. Throws std::invalid_argument for k < 2 or w < 1.
FingerprintSet winnow(const NormalizedText& text, std::size_t k, std::size_t w);
FingerprintSet winnow(const NormalizedText& text, WinnowParams params = {});

// |A ∩ B| / |A ∪ B|; two empty sets score 1. Throws
// IncompatibleFingerprintError when the sets were built with different params.
double matching_score(const FingerprintSet& a, const FingerprintSet& b);

// Convenience: normalize, winnow, and score two raw texts.
double text_similarity(std::string_view a, std::string_view b, WinnowParams params = {});

}  // namespace licvar
