#include "licvar/fingerprint.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "licvar/errors.hpp"

namespace licvar {

namespace {

// Decodes one UTF-8 sequence at `i`. Returns the code point and its length,
// or {-1, 1} for an invalid byte.
std::pair<long, std::size_t> decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  long cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {-1, 1};
  }
  if (i + len > s.size()) return {-1, 1};
  for (std::size_t j = 1; j < len; ++j) {
    const auto b = static_cast<unsigned char>(s[i + j]);
    if ((b & 0xC0) != 0x80) return {-1, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

bool is_separator_codepoint(long cp) {
  return (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x2190 && cp <= 0x2BFF) ||
         (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE30 && cp <= 0xFE4F) ||
         (cp >= 0xFF00 && cp <= 0xFF0F) || cp == 0xFEFF;
}

void append_utf8(std::string& out, long cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

NormalizedText normalize(std::string_view raw) {
  NormalizedText out;
  out.text.reserve(raw.size());
  out.offsets.reserve(raw.size());
  bool pending_space = false;

  auto emit = [&](std::string_view bytes, std::size_t origin) {
    if (pending_space && !out.text.empty()) {
      out.text += ' ';
      out.offsets.push_back(origin);
    }
    pending_space = false;
    for (char c : bytes) {
      out.text += c;
      out.offsets.push_back(origin);
    }
  };

  for (std::size_t i = 0; i < raw.size();) {
    auto [cp, len] = decode_utf8(raw, i);
    if (cp >= 0 && cp < 0x80) {
      const char c = static_cast<char>(cp);
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
        emit(std::string_view(&raw[i], 1), i);
      } else if (c >= 'A' && c <= 'Z') {
        const char lc = static_cast<char>(c - 'A' + 'a');
        emit(std::string_view(&lc, 1), i);
      } else {
        pending_space = true;
      }
    } else if (cp < 0 || is_separator_codepoint(cp)) {
      pending_space = true;
    } else {
      long lc = cp;
      if (cp >= 0xC0 && cp <= 0xDE) lc = cp + 0x20;  // Latin-1 uppercase
      std::string bytes;
      append_utf8(bytes, lc);
      emit(bytes, i);
    }
    i += len;
  }
  return out;
}

std::string normalized_string(std::string_view raw) { return normalize(raw).text; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint64_t> kgram_hashes(std::string_view text, std::size_t k) {
  std::vector<std::uint64_t> out;
  if (k == 0 || text.size() < k) return out;
  out.reserve(text.size() - k + 1);
  for (std::size_t i = 0; i + k <= text.size(); ++i) out.push_back(fnv1a64(text.substr(i, k)));
  return out;
}

FingerprintSet winnow(const NormalizedText& text, std::size_t k, std::size_t w) {
  if (k < 2) throw std::invalid_argument("winnow: k must be at least 2");
  if (w < 1) throw std::invalid_argument("winnow: w must be at least 1");
  FingerprintSet out;
  out.params = {k, w};
  const auto hashes = kgram_hashes(text.text, k);
  if (hashes.empty()) return out;
  if (hashes.size() <= w) {
    out.signatures.insert(*std::min_element(hashes.begin(), hashes.end()));
    return out;
  }
  // Monotonic deque of indices with strictly increasing hashes; the front is
  // the leftmost minimum of the current window.
  std::deque<std::size_t> window;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    while (!window.empty() && hashes[window.back()] > hashes[i]) window.pop_back();
    window.push_back(i);
    if (window.front() + w <= i) window.pop_front();
    if (i + 1 >= w) out.signatures.insert(hashes[window.front()]);
  }
  return out;
}

FingerprintSet winnow(const NormalizedText& text, WinnowParams params) {
  return winnow(text, params.k, params.w);
}

double matching_score(const FingerprintSet& a, const FingerprintSet& b) {
  if (!(a.params == b.params)) {
    throw IncompatibleFingerprintError("fingerprints built with different (k, w) parameters");
  }
  if (a.signatures.empty() && b.signatures.empty()) return 1.0;
  std::size_t shared = 0;
  for (auto h : a.signatures) shared += b.signatures.count(h);
  const std::size_t unioned = a.signatures.size() + b.signatures.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(unioned);
}

double text_similarity(std::string_view a, std::string_view b, WinnowParams params) {
  return matching_score(winnow(normalize(a), params), winnow(normalize(b), params));
}

}  // namespace licvar
