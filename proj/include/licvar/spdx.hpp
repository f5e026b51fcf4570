#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace licvar::spdx {

// Exact (case-sensitive) membership in the bundled SPDX identifier table.
bool is_license_id(std::string_view id);

// Case-insensitive lookup returning the identifier in canonical case.
std::optional<std::string> canonical_id(std::string_view id);

// Maps deprecated or unversioned-suffix forms onto the identifiers the
// knowledge base uses, e.g. "GPL-3.0" -> "GPL-3.0-only" and
// "GPL-3.0+" -> "GPL-3.0-or-later".
std::string preferred_id(std::string_view id);

// Resolves a free-form license name ("Apache License 2.0", "MIT License",
// "GPLv3") to an SPDX id. Names that identify a family but not a version,
// such as "BSD" or "GPL", yield nullopt with *ambiguous set to true.
std::optional<std::string> resolve_name(std::string_view name, bool* ambiguous = nullptr);

// Finds the license named in a short reference such as "Licensed under the
// Apache License, Version 2.0". SPDX ids written out verbatim win over names;
// among names the longest wins. "or later" wording turns an -only id into
// its -or-later form. *ambiguous is set when only a family name was found.
std::optional<std::string> find_license_mention(std::string_view text, bool* ambiguous = nullptr);

// Short exception tag for an SPDX exception id, e.g. "Classpath-exception-2.0"
// -> "Classpath". Unknown ids are returned unchanged.
std::string exception_tag(std::string_view exception_id);

// One term of a disjunctive-normal-form license expression.
struct ExpressionTerm {
  std::string license;                 // SPDX id as written (after canonicalization)
  std::optional<std::string> exception;  // WITH clause
};

// A parsed expression: alternatives joined by OR, each a conjunction joined
// by AND. Parentheses are not supported; returns nullopt when the input does
// not look like an SPDX expression over known ids.
using Expression = std::vector<std::vector<ExpressionTerm>>;
std::optional<Expression> parse_expression(std::string_view text);

}  // namespace licvar::spdx
