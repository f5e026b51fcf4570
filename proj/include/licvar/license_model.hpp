#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace licvar {

// The compatibility-relevant license terms. Scalar kinds come first, then the
// five list-valued kinds.
enum class TermKind : std::uint8_t {
  kCopyright,
  kCopyleft,
  kChangeStatement,
  kPatentGrant,
  kTrademarkLimitation,
  kNetworkUse,
  kAttributionRetention,
  kEnhancedAttribution,
  kPatentLitigationTermination,
  kExplicitAcceptance,
  kSecondaryLicense,
  kGplCombination,
  kCompatibleVersion,
  kUsageLimitation,
  kException,
};

inline constexpr std::size_t kTermKindCount = 15;

inline constexpr std::array<TermKind, kTermKindCount> kAllTermKinds = {
    TermKind::kCopyright,
    TermKind::kCopyleft,
    TermKind::kChangeStatement,
    TermKind::kPatentGrant,
    TermKind::kTrademarkLimitation,
    TermKind::kNetworkUse,
    TermKind::kAttributionRetention,
    TermKind::kEnhancedAttribution,
    TermKind::kPatentLitigationTermination,
    TermKind::kExplicitAcceptance,
    TermKind::kSecondaryLicense,
    TermKind::kGplCombination,
    TermKind::kCompatibleVersion,
    TermKind::kUsageLimitation,
    TermKind::kException,
};

enum class ValueShape { kScalar, kLicenseList, kTagList };

constexpr std::size_t index_of(TermKind kind) { return static_cast<std::size_t>(kind); }
ValueShape shape_of(TermKind kind);
inline bool is_scalar(TermKind kind) { return shape_of(kind) == ValueShape::kScalar; }

std::string_view to_string(TermKind kind);
std::optional<TermKind> term_kind_from_string(std::string_view name);

// Inclusive scalar range for scalar kinds.
struct ScalarDomain {
  int min;
  int max;
};
ScalarDomain scalar_domain(TermKind kind);

struct LicenseList {
  std::vector<std::string> ids;
  friend bool operator==(const LicenseList&, const LicenseList&) = default;
};

struct TagList {
  std::vector<std::string> tags;
  friend bool operator==(const TagList&, const TagList&) = default;
};

// Tagged union of the value shapes. List values are kept sorted and
// deduplicated; an empty list collapses to Unset ("None").
class TermValue {
 public:
  TermValue() = default;

  static TermValue unset() { return TermValue(); }
  static TermValue scalar(int v);
  static TermValue licenses(std::vector<std::string> ids);
  static TermValue tags(std::vector<std::string> tags);

  bool is_unset() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_scalar() const { return std::holds_alternative<int>(v_); }
  bool is_license_list() const { return std::holds_alternative<LicenseList>(v_); }
  bool is_tag_list() const { return std::holds_alternative<TagList>(v_); }

  int as_scalar() const;
  const std::vector<std::string>& as_list() const;  // licenses or tags; empty for Unset

  std::string to_display() const;

  friend bool operator==(const TermValue&, const TermValue&) = default;

 private:
  std::variant<std::monostate, int, LicenseList, TagList> v_;
};

// True when `value` has the shape and range required by `kind`.
bool in_domain(TermKind kind, const TermValue& value);

enum class Provenance { kKnowledgeBaseReuse, kModelInferred, kConflictResolved, kDefault };
std::string_view to_string(Provenance p);
std::optional<Provenance> provenance_from_string(std::string_view name);

// Structured representation of one license. Values may be absent while a
// vector is under construction; validate() reports incompleteness.
class TermVector {
 public:
  bool has(TermKind kind) const { return values_[index_of(kind)].has_value(); }
  const TermValue& get(TermKind kind) const;
  void set(TermKind kind, TermValue value, Provenance provenance = Provenance::kDefault);
  void erase(TermKind kind);

  Provenance provenance(TermKind kind) const { return provenance_[index_of(kind)]; }
  void set_provenance(TermKind kind, Provenance p) { provenance_[index_of(kind)] = p; }

  int copyright() const { return get(TermKind::kCopyright).as_scalar(); }
  int copyleft() const { return get(TermKind::kCopyleft).as_scalar(); }
  const std::vector<std::string>& list(TermKind kind) const { return get(kind).as_list(); }

  // Value equality only; provenance is bookkeeping.
  bool same_terms(const TermVector& other) const { return values_ == other.values_; }

  friend bool operator==(const TermVector&, const TermVector&) = default;

 private:
  std::array<std::optional<TermValue>, kTermKindCount> values_{};
  std::array<Provenance, kTermKindCount> provenance_{};
};

// "Not mentioned" value for a kind absent from a text.
TermValue not_mentioned_value(TermKind kind);
// Most restrictive value in the kind's domain; used when the model cannot
// produce an answer.
TermValue most_restrictive_value(TermKind kind);

// Pointwise conservative merge. Throws ValueDomainError when either input is
// outside the kind's domain.
TermValue restrictiveness_max(TermKind kind, const TermValue& a, const TermValue& b);

// Tokens for the active obligations and restrictions of a vector: the names
// of binary kinds set to 1, patent_grant when it is -1, and one
// "usage_limitation:<tag>" token per usage tag. Copyright and copyleft are
// excluded.
std::set<std::string> obligation_set(const TermVector& v);

struct Violation {
  std::optional<TermKind> kind;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate(const TermVector& v);

// A complete vector with every kind set to its not-mentioned value.
TermVector not_mentioned_vector();

// --- License identifiers ---------------------------------------------------

struct LicenseId {
  std::string id;
  std::string name;
  bool canonical = false;

  friend bool operator==(const LicenseId&, const LicenseId&) = default;
  friend auto operator<=>(const LicenseId& a, const LicenseId& b) { return a.id <=> b.id; }
};

// Builds an id, setting `canonical` from the bundled SPDX table. Throws
// ValidationError on an empty identifier.
LicenseId make_license_id(std::string id, std::string name = {});
// Sentinel for evidence that could not be recognized.
LicenseId unknown_license_id(std::string_view raw);
bool is_unknown(const LicenseId& id);

// --- JSON ------------------------------------------------------------------

inline constexpr int kTermVectorSchemaVersion = 1;

nlohmann::json term_value_to_json(const TermValue& value);
TermValue term_value_from_json(TermKind kind, const nlohmann::json& j);

// {"schema_version": 1, "<kind>": value, ..., "provenance": {...}}
nlohmann::json to_json(const TermVector& v, bool with_provenance = true);
// Throws SchemaError on unknown keys, missing kinds, or shape mismatches.
// Domain violations are left for validate() so callers can report them.
TermVector term_vector_from_json(const nlohmann::json& j);

}  // namespace licvar
