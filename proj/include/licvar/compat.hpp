#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "licvar/license_model.hpp"

namespace licvar {

enum class Compat { kSecondary, kCombinative, kIncompatible };
std::string_view to_string(Compat c);
std::optional<Compat> compat_from_string(std::string_view s);

struct TraceStep {
  std::string rule;
  std::string inputs;
  std::string outcome;
  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct CompatibilityVerdict {
  std::set<Compat> kinds;  // never empty; {Incompatible} or a subset of {S, C}
  std::vector<TraceStep> trace;

  bool incompatible() const { return kinds.count(Compat::kIncompatible) > 0; }
  std::string to_display() const;  // "S+C", "C", "I"
  friend bool operator==(const CompatibilityVerdict&, const CompatibilityVerdict&) = default;
};

// One side of a compatibility question.
struct LicenseTerms {
  std::string id;  // SPDX id or LicenseRef
  TermVector terms;
  std::vector<std::string> exception_tags;  // from "WITH" clauses; merged with terms' exception list
};

struct ExceptionRule {
  std::string id;
  std::string tag;                               // upstream exception tag that triggers the rule
  std::vector<std::string> downstream_ids;       // empty: any downstream
  std::optional<int> max_downstream_copyleft;    // inclusive
  std::vector<Compat> add;
  std::vector<Compat> remove;
  std::string note;
};

// Data-driven exception rules, applied in id order.
class ExceptionRuleTable {
 public:
  ExceptionRuleTable() = default;
  explicit ExceptionRuleTable(std::vector<ExceptionRule> rules);
  // Throws SchemaError on malformed files.
  static ExceptionRuleTable load(const std::filesystem::path& file);
  const std::vector<ExceptionRule>& rules() const { return rules_; }
  bool knows(std::string_view tag) const;

 private:
  std::vector<ExceptionRule> rules_;
};

// Obligation-subset test, or L2 listed as a compatible version or secondary
// license. A copyleft upstream additionally needs c2 >= c1 and a downstream
// that is not proprietary.
bool is_secondary_compatible(const TermVector& t1, const TermVector& t2, const std::string& l2);
bool is_combinative_compatible(const TermVector& t1, const TermVector& t2, const std::string& l2);

// Applies every rule whose tag is among `upstream_tags` and whose downstream
// predicate holds. Unknown tags leave the kinds unchanged and add a trace note.
CompatibilityVerdict apply_exception_rules(CompatibilityVerdict verdict, const std::set<std::string>& upstream_tags,
                                           const TermVector& t2, const std::string& l2,
                                           const ExceptionRuleTable& rules);

// Full check. Throws ValidationError when either vector fails validation and
// UnknownLicenseError when the upstream id is an unknown sentinel.
CompatibilityVerdict check(const LicenseTerms& upstream, const LicenseTerms& downstream,
                           const ExceptionRuleTable& rules = {});

nlohmann::json to_json(const CompatibilityVerdict& v);
CompatibilityVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace licvar
