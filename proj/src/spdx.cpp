#include "licvar/spdx.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <utility>

namespace licvar::spdx {

namespace {

constexpr std::string_view kLicenseIds[] = {
#include "spdx_ids.inc"
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Collapses punctuation and whitespace so that "Apache License, Version 2.0"
// and "apache license version 2.0" compare equal.
std::string simplify(std::string_view s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '.' || c == '+') {
      if (space && !out.empty()) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      space = true;
    }
  }
  return out;
}

struct Alias {
  std::string_view name;  // simplified form
  std::string_view id;    // empty: family without version
};

constexpr Alias kAliases[] = {
    {"mit", "MIT"},
    {"mit license", "MIT"},
    {"the mit license", "MIT"},
    {"mit licence", "MIT"},
    {"expat", "MIT"},
    {"expat license", "MIT"},
    {"isc", "ISC"},
    {"isc license", "ISC"},
    {"isc license iscl", "ISC"},
    {"iscl", "ISC"},
    {"unlicense", "Unlicense"},
    {"the unlicense", "Unlicense"},
    {"the unlicense unlicense", "Unlicense"},
    {"apache 2", "Apache-2.0"},
    {"apache 2.0", "Apache-2.0"},
    {"apache2", "Apache-2.0"},
    {"apache v2", "Apache-2.0"},
    {"apache license 2.0", "Apache-2.0"},
    {"apache license version 2.0", "Apache-2.0"},
    {"apache software license 2.0", "Apache-2.0"},
    {"apache software license version 2.0", "Apache-2.0"},
    {"asl 2.0", "Apache-2.0"},
    {"apache", ""},
    {"apache license", ""},
    {"apache software license", ""},
    {"bsd", ""},
    {"bsd license", ""},
    {"bsd licence", ""},
    {"bsd style", ""},
    {"bsd like", ""},
    {"new bsd", "BSD-3-Clause"},
    {"new bsd license", "BSD-3-Clause"},
    {"modified bsd", "BSD-3-Clause"},
    {"modified bsd license", "BSD-3-Clause"},
    {"revised bsd", "BSD-3-Clause"},
    {"bsd 3 clause", "BSD-3-Clause"},
    {"bsd 3 clause license", "BSD-3-Clause"},
    {"3 clause bsd", "BSD-3-Clause"},
    {"3 clause bsd license", "BSD-3-Clause"},
    {"simplified bsd", "BSD-2-Clause"},
    {"simplified bsd license", "BSD-2-Clause"},
    {"bsd 2 clause", "BSD-2-Clause"},
    {"bsd 2 clause license", "BSD-2-Clause"},
    {"2 clause bsd", "BSD-2-Clause"},
    {"freebsd", "BSD-2-Clause"},
    {"gpl", ""},
    {"gnu gpl", ""},
    {"gnu general public license", ""},
    {"gnu general public license gpl", ""},
    {"gplv2", "GPL-2.0-only"},
    {"gpl v2", "GPL-2.0-only"},
    {"gpl 2", "GPL-2.0-only"},
    {"gpl 2.0", "GPL-2.0-only"},
    {"gnu general public license v2 gplv2", "GPL-2.0-only"},
    {"gnu general public license version 2", "GPL-2.0-only"},
    {"gplv2+", "GPL-2.0-or-later"},
    {"gnu general public license v2 or later gplv2+", "GPL-2.0-or-later"},
    {"gplv3", "GPL-3.0-only"},
    {"gpl v3", "GPL-3.0-only"},
    {"gpl 3", "GPL-3.0-only"},
    {"gpl 3.0", "GPL-3.0-only"},
    {"gnu general public license v3 gplv3", "GPL-3.0-only"},
    {"gnu general public license version 3", "GPL-3.0-only"},
    {"gplv3+", "GPL-3.0-or-later"},
    {"gnu general public license v3 or later gplv3+", "GPL-3.0-or-later"},
    {"lgpl", ""},
    {"gnu lesser general public license", ""},
    {"lgplv2", "LGPL-2.1-only"},
    {"lgplv2.1", "LGPL-2.1-only"},
    {"lgpl 2.1", "LGPL-2.1-only"},
    {"gnu lesser general public license v2 lgplv2", "LGPL-2.1-only"},
    {"lgplv2+", "LGPL-2.1-or-later"},
    {"gnu lesser general public license v2 or later lgplv2+", "LGPL-2.1-or-later"},
    {"lgplv3", "LGPL-3.0-only"},
    {"lgpl 3", "LGPL-3.0-only"},
    {"gnu lesser general public license v3 lgplv3", "LGPL-3.0-only"},
    {"lgplv3+", "LGPL-3.0-or-later"},
    {"gnu lesser general public license v3 or later lgplv3+", "LGPL-3.0-or-later"},
    {"agpl", ""},
    {"agplv3", "AGPL-3.0-only"},
    {"gnu affero general public license v3", "AGPL-3.0-only"},
    {"gnu affero general public license v3 or later agplv3+", "AGPL-3.0-or-later"},
    {"mpl", ""},
    {"mpl 2.0", "MPL-2.0"},
    {"mpl2", "MPL-2.0"},
    {"mozilla public license 2.0", "MPL-2.0"},
    {"mozilla public license 2.0 mpl 2.0", "MPL-2.0"},
};

}  // namespace

bool is_license_id(std::string_view id) {
  return std::binary_search(std::begin(kLicenseIds), std::end(kLicenseIds), id);
}

std::optional<std::string> canonical_id(std::string_view id) {
  if (is_license_id(id)) return std::string(id);
  const std::string key = lower(id);
  for (std::string_view candidate : kLicenseIds) {
    if (lower(candidate) == key) return std::string(candidate);
  }
  return std::nullopt;
}

std::string preferred_id(std::string_view id) {
  static constexpr std::pair<std::string_view, std::string_view> kRenames[] = {
      {"GPL-1.0", "GPL-1.0-only"},     {"GPL-1.0+", "GPL-1.0-or-later"},
      {"GPL-2.0", "GPL-2.0-only"},     {"GPL-2.0+", "GPL-2.0-or-later"},
      {"GPL-3.0", "GPL-3.0-only"},     {"GPL-3.0+", "GPL-3.0-or-later"},
      {"LGPL-2.0", "LGPL-2.0-only"},   {"LGPL-2.0+", "LGPL-2.0-or-later"},
      {"LGPL-2.1", "LGPL-2.1-only"},   {"LGPL-2.1+", "LGPL-2.1-or-later"},
      {"LGPL-3.0", "LGPL-3.0-only"},   {"LGPL-3.0+", "LGPL-3.0-or-later"},
      {"AGPL-1.0", "AGPL-1.0-only"},   {"AGPL-3.0", "AGPL-3.0-only"},
  };
  for (const auto& [from, to] : kRenames) {
    if (id == from) return std::string(to);
  }
  return std::string(id);
}

std::optional<std::string> resolve_name(std::string_view name, bool* ambiguous) {
  if (ambiguous) *ambiguous = false;
  std::string trimmed(name);
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
  if (trimmed.empty()) return std::nullopt;

  if (auto id = canonical_id(trimmed)) return preferred_id(*id);

  const std::string key = simplify(trimmed);
  for (const auto& alias : kAliases) {
    if (alias.name == key) {
      if (alias.id.empty()) {
        if (ambiguous) *ambiguous = true;
        return std::nullopt;
      }
      return std::string(alias.id);
    }
  }
  return std::nullopt;
}

std::optional<std::string> find_license_mention(std::string_view text, bool* ambiguous) {
  if (ambiguous) *ambiguous = false;
  std::string s = simplify(text);
  // Sentence-final dots would otherwise stick to version numbers.
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '.' && (i + 1 == s.size() || s[i + 1] == ' ')) s[i] = ' ';
  }
  s = " " + s + " ";

  std::optional<std::string> found;
  std::istringstream words{std::string(text)};
  for (std::string tok; words >> tok && !found;) {
    const auto b = tok.find_first_not_of("\"'(<[,;:");
    const auto e = tok.find_last_not_of("\"')>],;:.");
    if (b == std::string::npos || e < b) continue;
    tok = tok.substr(b, e - b + 1);
    const bool id_like = tok.find_first_of("-0123456789") != std::string::npos;
    if (id_like && is_license_id(tok)) found = preferred_id(tok);
  }
  bool family = false;
  std::size_t best_len = 0;
  if (!found) {
    for (const auto& alias : kAliases) {
      if (s.find(" " + std::string(alias.name) + " ") == std::string::npos) continue;
      if (alias.id.empty()) {
        family = true;
      } else if (alias.name.size() > best_len) {
        best_len = alias.name.size();
        found = std::string(alias.id);
      }
    }
  }
  if (!found) {
    if (ambiguous) *ambiguous = family;
    return std::nullopt;
  }
  const bool later = s.find(" or later ") != std::string::npos || s.find(" any later version ") != std::string::npos;
  const std::string only = "-only";
  if (later && found->size() > only.size() && found->compare(found->size() - only.size(), only.size(), only) == 0) {
    *found = found->substr(0, found->size() - only.size()) + "-or-later";
  }
  return found;
}

std::string exception_tag(std::string_view exception_id) {
  static constexpr std::pair<std::string_view, std::string_view> kTags[] = {
      {"classpath-exception-2.0", "Classpath"},
      {"llvm-exception", "LLVM"},
      {"gcc-exception-2.0", "GCC-runtime"},
      {"gcc-exception-3.1", "GCC-runtime"},
      {"autoconf-exception-3.0", "Autoconf"},
      {"bison-exception-2.2", "Bison"},
      {"openjdk-assembly-exception-1.0", "Classpath"},
  };
  const std::string key = lower(exception_id);
  for (const auto& [id, tag] : kTags) {
    if (key == id) return std::string(tag);
  }
  return std::string(exception_id);
}

std::optional<Expression> parse_expression(std::string_view text) {
  std::string s(text);
  // Allow a single pair of enclosing parentheses.
  auto first = s.find_first_not_of(" \t\r\n");
  auto last = s.find_last_not_of(" \t\r\n");
  if (first == std::string::npos) return std::nullopt;
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
  if (s.find_first_of("()\n") != std::string::npos) return std::nullopt;

  std::istringstream in(s);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  if (tokens.empty()) return std::nullopt;

  Expression expr(1);
  std::size_t i = 0;
  auto is_op = [](const std::string& t, std::string_view op) { return lower(t) == lower(op); };
  while (i < tokens.size()) {
    ExpressionTerm term;
    const std::string& raw = tokens[i];
    if (raw.rfind("LicenseRef-", 0) == 0) {
      term.license = raw;
    } else if (auto id = canonical_id(raw)) {
      term.license = preferred_id(*id);
    } else {
      return std::nullopt;
    }
    ++i;
    if (i + 1 < tokens.size() && is_op(tokens[i], "WITH")) {
      term.exception = tokens[i + 1];
      i += 2;
    }
    expr.back().push_back(std::move(term));
    if (i == tokens.size()) break;
    if (is_op(tokens[i], "OR")) {
      expr.emplace_back();
    } else if (!is_op(tokens[i], "AND")) {
      return std::nullopt;
    }
    ++i;
    if (i == tokens.size()) return std::nullopt;
  }
  return expr;
}

}  // namespace licvar::spdx
