#include "licvar/license_model.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include "licvar/errors.hpp"
#include "licvar/spdx.hpp"

namespace licvar {

namespace {

constexpr std::array<std::string_view, kTermKindCount> kKindNames = {
    "copyright",
    "copyleft",
    "change_statement",
    "patent_grant",
    "trademark_limitation",
    "network_use",
    "attribution_retention",
    "enhanced_attribution",
    "patent_litigation_termination",
    "explicit_acceptance",
    "secondary_license",
    "gpl_combination",
    "compatible_version",
    "usage_limitation",
    "exception",
};

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Rank of a scalar value in the restrictiveness order; higher is more
// restrictive.
int restrictiveness_rank(TermKind kind, int v) {
  switch (kind) {
    case TermKind::kCopyright:
      // 0 (proprietary) > 2 (ambiguous) > 3 (explicit grant) > 1 (public domain)
      switch (v) {
        case 0: return 3;
        case 2: return 2;
        case 3: return 1;
        case 1: return 0;
        default: return -1;
      }
    case TermKind::kPatentGrant:
      // -1 (denied) > 0 (not mentioned) > 1 (granted)
      return -v;
    default:
      return v;
  }
}

}  // namespace

ValueShape shape_of(TermKind kind) {
  switch (kind) {
    case TermKind::kSecondaryLicense:
    case TermKind::kGplCombination:
    case TermKind::kCompatibleVersion:
      return ValueShape::kLicenseList;
    case TermKind::kUsageLimitation:
    case TermKind::kException:
      return ValueShape::kTagList;
    default:
      return ValueShape::kScalar;
  }
}

std::string_view to_string(TermKind kind) { return kKindNames[index_of(kind)]; }

std::optional<TermKind> term_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return kAllTermKinds[i];
  }
  return std::nullopt;
}

ScalarDomain scalar_domain(TermKind kind) {
  switch (kind) {
    case TermKind::kCopyright:
    case TermKind::kCopyleft:
      return {0, 3};
    case TermKind::kPatentGrant:
      return {-1, 1};
    default:
      return {0, 1};
  }
}

TermValue TermValue::scalar(int v) {
  TermValue t;
  t.v_ = v;
  return t;
}

TermValue TermValue::licenses(std::vector<std::string> ids) {
  TermValue t;
  ids = sorted_unique(std::move(ids));
  if (!ids.empty()) t.v_ = LicenseList{std::move(ids)};
  return t;
}

TermValue TermValue::tags(std::vector<std::string> tags) {
  TermValue t;
  tags = sorted_unique(std::move(tags));
  if (!tags.empty()) t.v_ = TagList{std::move(tags)};
  return t;
}

int TermValue::as_scalar() const {
  if (const int* p = std::get_if<int>(&v_)) return *p;
  throw ValueDomainError("term value is not a scalar: " + to_display());
}

const std::vector<std::string>& TermValue::as_list() const {
  static const std::vector<std::string> kEmpty;
  if (const auto* l = std::get_if<LicenseList>(&v_)) return l->ids;
  if (const auto* t = std::get_if<TagList>(&v_)) return t->tags;
  if (is_unset()) return kEmpty;
  throw ValueDomainError("term value is not a list: " + to_display());
}

std::string TermValue::to_display() const {
  if (is_unset()) return "None";
  if (const int* p = std::get_if<int>(&v_)) return std::to_string(*p);
  std::string out = "[";
  const auto& items = as_list();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + "]";
}

bool in_domain(TermKind kind, const TermValue& value) {
  switch (shape_of(kind)) {
    case ValueShape::kScalar: {
      if (!value.is_scalar()) return false;
      auto d = scalar_domain(kind);
      int v = value.as_scalar();
      return v >= d.min && v <= d.max;
    }
    case ValueShape::kLicenseList:
      if (value.is_unset()) return true;
      if (!value.is_license_list()) return false;
      return std::all_of(value.as_list().begin(), value.as_list().end(), [](const std::string& id) {
        return spdx::is_license_id(id) || (id.rfind("unknown:", 0) == 0 && id.size() > 8);
      });
    case ValueShape::kTagList:
      return value.is_unset() || value.is_tag_list();
  }
  return false;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kKnowledgeBaseReuse: return "knowledge-base-reuse";
    case Provenance::kModelInferred: return "model-inferred";
    case Provenance::kConflictResolved: return "conflict-resolved";
    case Provenance::kDefault: return "default";
  }
  return "default";
}

std::optional<Provenance> provenance_from_string(std::string_view name) {
  for (auto p : {Provenance::kKnowledgeBaseReuse, Provenance::kModelInferred,
                 Provenance::kConflictResolved, Provenance::kDefault}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

const TermValue& TermVector::get(TermKind kind) const {
  const auto& slot = values_[index_of(kind)];
  if (!slot) throw ValidationError("term vector has no value for " + std::string(to_string(kind)));
  return *slot;
}

void TermVector::set(TermKind kind, TermValue value, Provenance provenance) {
  values_[index_of(kind)] = std::move(value);
  provenance_[index_of(kind)] = provenance;
}

void TermVector::erase(TermKind kind) {
  values_[index_of(kind)].reset();
  provenance_[index_of(kind)] = Provenance::kDefault;
}

TermValue not_mentioned_value(TermKind kind) {
  switch (kind) {
    case TermKind::kCopyright:
      return TermValue::scalar(2);  // no explicit grant: ambiguous
    default:
      if (is_scalar(kind)) return TermValue::scalar(0);
      return TermValue::unset();
  }
}

TermValue most_restrictive_value(TermKind kind) {
  switch (kind) {
    case TermKind::kCopyright: return TermValue::scalar(0);
    case TermKind::kCopyleft: return TermValue::scalar(3);
    case TermKind::kPatentGrant: return TermValue::scalar(-1);
    case TermKind::kUsageLimitation: return TermValue::tags({"unspecified"});
    default:
      if (is_scalar(kind)) return TermValue::scalar(1);
      // Permission lists shrink toward None; exceptions only ever relax a
      // license, so the conservative answer is to assume none.
      return TermValue::unset();
  }
}

TermValue restrictiveness_max(TermKind kind, const TermValue& a, const TermValue& b) {
  for (const TermValue* v : {&a, &b}) {
    if (!in_domain(kind, *v)) {
      throw ValueDomainError("value " + v->to_display() + " outside the domain of " +
                             std::string(to_string(kind)));
    }
  }
  switch (shape_of(kind)) {
    case ValueShape::kScalar:
      return restrictiveness_rank(kind, a.as_scalar()) >= restrictiveness_rank(kind, b.as_scalar())
                 ? a
                 : b;
    case ValueShape::kLicenseList: {
      // Fewer relicensing permissions is more restrictive.
      std::vector<std::string> out;
      std::set_intersection(a.as_list().begin(), a.as_list().end(), b.as_list().begin(),
                            b.as_list().end(), std::back_inserter(out));
      return TermValue::licenses(std::move(out));
    }
    case ValueShape::kTagList: {
      std::vector<std::string> out;
      std::set_union(a.as_list().begin(), a.as_list().end(), b.as_list().begin(),
                     b.as_list().end(), std::back_inserter(out));
      return TermValue::tags(std::move(out));
    }
  }
  return a;
}

std::set<std::string> obligation_set(const TermVector& v) {
  std::set<std::string> out;
  for (TermKind kind : kAllTermKinds) {
    if (kind == TermKind::kCopyright || kind == TermKind::kCopyleft) continue;
    if (!v.has(kind)) continue;
    const TermValue& value = v.get(kind);
    if (kind == TermKind::kPatentGrant) {
      if (value.is_scalar() && value.as_scalar() == -1) out.emplace(to_string(kind));
    } else if (is_scalar(kind)) {
      if (value.is_scalar() && value.as_scalar() == 1) out.emplace(to_string(kind));
    } else if (kind == TermKind::kUsageLimitation) {
      for (const auto& tag : value.as_list()) out.insert("usage_limitation:" + tag);
    }
  }
  return out;
}

std::vector<Violation> validate(const TermVector& v) {
  std::vector<Violation> out;
  for (TermKind kind : kAllTermKinds) {
    if (!v.has(kind)) {
      out.push_back({kind, "completeness: no value for " + std::string(to_string(kind))});
      continue;
    }
    const TermValue& value = v.get(kind);
    if (is_scalar(kind) && value.is_unset()) {
      out.push_back({kind, "completeness: scalar term " + std::string(to_string(kind)) + " is unset"});
    } else if (!in_domain(kind, value)) {
      out.push_back({kind, "domain: " + std::string(to_string(kind)) + " = " + value.to_display()});
    }
  }
  return out;
}

TermVector not_mentioned_vector() {
  TermVector v;
  for (TermKind kind : kAllTermKinds) v.set(kind, not_mentioned_value(kind), Provenance::kDefault);
  return v;
}

LicenseId make_license_id(std::string id, std::string name) {
  if (id.empty()) throw ValidationError("license identifier must not be empty");
  LicenseId out;
  out.canonical = spdx::is_license_id(id);
  out.name = name.empty() ? id : std::move(name);
  out.id = std::move(id);
  return out;
}

LicenseId unknown_license_id(std::string_view raw) {
  LicenseId out;
  out.id = "unknown:" + std::string(raw.empty() ? "<none>" : raw);
  out.name = out.id;
  return out;
}

bool is_unknown(const LicenseId& id) { return id.id.empty() || id.id.rfind("unknown:", 0) == 0; }

nlohmann::json term_value_to_json(const TermValue& value) {
  if (value.is_unset()) return nullptr;
  if (value.is_scalar()) return value.as_scalar();
  return value.as_list();
}

TermValue term_value_from_json(TermKind kind, const nlohmann::json& j) {
  const std::string name(to_string(kind));
  if (j.is_null()) return TermValue::unset();
  switch (shape_of(kind)) {
    case ValueShape::kScalar:
      if (!j.is_number_integer()) throw SchemaError("term '" + name + "' must be an integer");
      return TermValue::scalar(j.get<int>());
    case ValueShape::kLicenseList:
    case ValueShape::kTagList: {
      if (!j.is_array()) throw SchemaError("term '" + name + "' must be a list or null");
      std::vector<std::string> items;
      for (const auto& e : j) {
        if (!e.is_string()) throw SchemaError("term '" + name + "' entries must be strings");
        items.push_back(e.get<std::string>());
      }
      return shape_of(kind) == ValueShape::kLicenseList ? TermValue::licenses(std::move(items))
                                                         : TermValue::tags(std::move(items));
    }
  }
  return TermValue::unset();
}

nlohmann::json to_json(const TermVector& v, bool with_provenance) {
  nlohmann::json j = nlohmann::json::object();
  j["schema_version"] = kTermVectorSchemaVersion;
  nlohmann::json prov = nlohmann::json::object();
  for (TermKind kind : kAllTermKinds) {
    const std::string name(to_string(kind));
    if (!v.has(kind)) continue;
    j[name] = term_value_to_json(v.get(kind));
    prov[name] = std::string(to_string(v.provenance(kind)));
  }
  if (with_provenance) j["provenance"] = std::move(prov);
  return j;
}

TermVector term_vector_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("term vector must be a JSON object");
  if (auto it = j.find("schema_version"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int>() != kTermVectorSchemaVersion) {
      throw SchemaError("unsupported term vector schema_version");
    }
  }
  for (const auto& [key, _] : j.items()) {
    if (key == "schema_version" || key == "provenance") continue;
    if (!term_kind_from_string(key)) throw SchemaError("unknown term kind '" + key + "'");
  }
  TermVector v;
  for (TermKind kind : kAllTermKinds) {
    const std::string name(to_string(kind));
    auto it = j.find(name);
    if (it == j.end()) throw SchemaError("term vector is missing '" + name + "'");
    v.set(kind, term_value_from_json(kind, *it), Provenance::kKnowledgeBaseReuse);
  }
  if (auto it = j.find("provenance"); it != j.end()) {
    if (!it->is_object()) throw SchemaError("'provenance' must be an object");
    for (const auto& [key, value] : it->items()) {
      auto kind = term_kind_from_string(key);
      auto p = value.is_string() ? provenance_from_string(value.get<std::string>()) : std::nullopt;
      if (!kind || !p) throw SchemaError("bad provenance entry '" + key + "'");
      v.set_provenance(*kind, *p);
    }
  }
  return v;
}

}  // namespace licvar
