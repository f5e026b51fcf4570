#include "licvar/compat.hpp"

#include <algorithm>
#include <fstream>

#include "licvar/errors.hpp"

namespace licvar {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::string join(const std::set<std::string>& s) {
  std::string out;
  for (const auto& x : s) out += (out.empty() ? "" : ",") + x;
  return out.empty() ? "{}" : "{" + out + "}";
}

std::string kinds_display(const std::set<Compat>& kinds) {
  if (kinds.empty()) return "{}";
  std::string out;
  for (Compat c : kinds) out += (out.empty() ? "" : "+") + std::string(to_string(c)).substr(0, 1);
  return out;
}

bool relicensable(const TermVector& t1, const TermVector& t2, const std::string& l2) {
  const auto o1 = obligation_set(t1);
  const auto o2 = obligation_set(t2);
  return std::includes(o2.begin(), o2.end(), o1.begin(), o1.end()) ||
         contains(t1.list(TermKind::kCompatibleVersion), l2) || contains(t1.list(TermKind::kSecondaryLicense), l2);
}

std::string term_summary(const TermVector& t) {
  return "copyright=" + std::to_string(t.copyright()) + " copyleft=" + std::to_string(t.copyleft()) +
         " obligations=" + join(obligation_set(t));
}

}  // namespace

std::string_view to_string(Compat c) {
  switch (c) {
    case Compat::kSecondary: return "Secondary";
    case Compat::kCombinative: return "Combinative";
    case Compat::kIncompatible: return "Incompatible";
  }
  return "?";
}

std::optional<Compat> compat_from_string(std::string_view s) {
  for (Compat c : {Compat::kSecondary, Compat::kCombinative, Compat::kIncompatible}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string CompatibilityVerdict::to_display() const { return kinds_display(kinds); }

ExceptionRuleTable::ExceptionRuleTable(std::vector<ExceptionRule> rules) : rules_(std::move(rules)) {
  std::sort(rules_.begin(), rules_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

ExceptionRuleTable ExceptionRuleTable::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError(file.string() + ": cannot open");
  std::vector<ExceptionRule> rules;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& r : j.at("rules")) {
      ExceptionRule rule;
      rule.id = r.at("id").get<std::string>();
      rule.tag = r.at("tag").get<std::string>();
      rule.note = r.value("note", std::string{});
      if (r.contains("downstream")) {
        const auto& d = r.at("downstream");
        rule.downstream_ids = d.value("ids", std::vector<std::string>{});
        if (d.contains("max_copyleft")) rule.max_downstream_copyleft = d.at("max_copyleft").get<int>();
      }
      auto kinds = [&](const char* key) {
        std::vector<Compat> out;
        for (const auto& name : r.value(key, std::vector<std::string>{})) {
          auto c = compat_from_string(name);
          if (!c || *c == Compat::kIncompatible) {
            throw SchemaError(file.string() + ": rule " + rule.id + ": '" + key + "' accepts Secondary or Combinative");
          }
          out.push_back(*c);
        }
        return out;
      };
      rule.add = kinds("add");
      rule.remove = kinds("remove");
      rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }
  return ExceptionRuleTable(std::move(rules));
}

bool ExceptionRuleTable::knows(std::string_view tag) const {
  return std::any_of(rules_.begin(), rules_.end(), [&](const auto& r) { return r.tag == tag; });
}

bool is_secondary_compatible(const TermVector& t1, const TermVector& t2, const std::string& l2) {
  const int c1 = t1.copyleft();
  const int c2 = t2.copyleft();
  if (c1 == 0) return relicensable(t1, t2, l2);
  return c2 >= c1 && relicensable(t1, t2, l2) && t2.copyright() != 0;
}

bool is_combinative_compatible(const TermVector& t1, const TermVector& t2, const std::string& l2) {
  const int c1 = t1.copyleft();
  const int c2 = t2.copyleft();
  const bool weak_downstream = c2 == 0 || c2 == 1;
  return (c1 == 0 && weak_downstream) || ((c1 == 1 || c1 == 2) && weak_downstream) ||
         (c1 > 0 && contains(t1.list(TermKind::kGplCombination), l2));
}

CompatibilityVerdict apply_exception_rules(CompatibilityVerdict verdict, const std::set<std::string>& upstream_tags,
                                           const TermVector& t2, const std::string& l2,
                                           const ExceptionRuleTable& rules) {
  for (const std::string& tag : upstream_tags) {
    if (!rules.knows(tag)) {
      verdict.trace.push_back({"exception:" + tag, "tag=" + tag, "no rule for this exception; unchanged"});
    }
  }
  for (const ExceptionRule& rule : rules.rules()) {
    if (!upstream_tags.count(rule.tag)) continue;
    const bool id_ok = rule.downstream_ids.empty() || contains(rule.downstream_ids, l2);
    const bool copyleft_ok = !rule.max_downstream_copyleft || t2.copyleft() <= *rule.max_downstream_copyleft;
    if (!id_ok || !copyleft_ok) {
      verdict.trace.push_back({rule.id, "tag=" + rule.tag + " downstream=" + l2, "predicate false; unchanged"});
      continue;
    }
    const std::string before = kinds_display(verdict.kinds);
    for (Compat c : rule.add) verdict.kinds.insert(c);
    for (Compat c : rule.remove) verdict.kinds.erase(c);
    verdict.trace.push_back(
        {rule.id, "tag=" + rule.tag + " downstream=" + l2, before + " -> " + kinds_display(verdict.kinds)});
  }
  return verdict;
}

CompatibilityVerdict check(const LicenseTerms& upstream, const LicenseTerms& downstream,
                           const ExceptionRuleTable& rules) {
  if (upstream.id.rfind("unknown:", 0) == 0) {
    throw UnknownLicenseError("upstream license is not recognized: " + upstream.id);
  }
  for (const auto* side : {&upstream, &downstream}) {
    const auto problems = validate(side->terms);
    if (!problems.empty()) {
      throw ValidationError("term vector of " + side->id + " is invalid: " + problems.front().message);
    }
  }
  const TermVector& t1 = upstream.terms;
  const TermVector& t2 = downstream.terms;
  const std::string& l2 = downstream.id;
  CompatibilityVerdict v;
  const std::string pair = upstream.id + " -> " + l2;

  const int r2 = t2.copyright();
  if (t1.copyright() == 0 && r2 >= 1 && r2 <= 3) {
    v.kinds = {Compat::kIncompatible};
    v.trace.push_back({"proprietary-upstream", pair + " upstream copyright=0 downstream copyright=" + std::to_string(r2),
                       "free downstream cannot depend on proprietary upstream: I"});
    return v;
  }
  if (upstream.id == downstream.id) {
    v.kinds = {Compat::kSecondary, Compat::kCombinative};
    v.trace.push_back({"identical-license", pair, "S+C"});
    return v;
  }

  const bool secondary = is_secondary_compatible(t1, t2, l2);
  std::string sec_note = secondary ? "S" : "no S";
  if (t1.copyleft() > 0 && t2.copyright() == 0) sec_note += " (copyleft upstream needs a non-proprietary downstream)";
  v.trace.push_back({"secondary", "upstream " + term_summary(t1) + "; downstream " + term_summary(t2), sec_note});
  if (secondary) v.kinds.insert(Compat::kSecondary);

  const bool combinative = is_combinative_compatible(t1, t2, l2);
  v.trace.push_back({"combinative",
                     "c1=" + std::to_string(t1.copyleft()) + " c2=" + std::to_string(t2.copyleft()) +
                         " gpl_combination=" + t1.get(TermKind::kGplCombination).to_display(),
                     combinative ? "C" : "no C"});
  if (combinative) v.kinds.insert(Compat::kCombinative);

  std::set<std::string> tags(upstream.exception_tags.begin(), upstream.exception_tags.end());
  for (const auto& t : t1.list(TermKind::kException)) tags.insert(t);
  if (!tags.empty()) v = apply_exception_rules(std::move(v), tags, t2, l2, rules);

  if (v.kinds.empty()) {
    v.kinds = {Compat::kIncompatible};
    v.trace.push_back({"result", pair, "no compatibility type holds: I"});
  } else {
    v.trace.push_back({"result", pair, kinds_display(v.kinds)});
  }
  return v;
}

nlohmann::json to_json(const CompatibilityVerdict& v) {
  nlohmann::json kinds = nlohmann::json::array();
  for (Compat c : v.kinds) kinds.push_back(to_string(c));
  nlohmann::json trace = nlohmann::json::array();
  for (const TraceStep& s : v.trace) trace.push_back({{"rule", s.rule}, {"inputs", s.inputs}, {"outcome", s.outcome}});
  return {{"kinds", kinds}, {"trace", trace}};
}

CompatibilityVerdict verdict_from_json(const nlohmann::json& j) {
  CompatibilityVerdict v;
  try {
    for (const auto& k : j.at("kinds")) {
      auto c = compat_from_string(k.get<std::string>());
      if (!c) throw SchemaError("unknown compatibility kind " + k.dump());
      v.kinds.insert(*c);
    }
    for (const auto& s : j.at("trace")) {
      v.trace.push_back({s.at("rule").get<std::string>(), s.at("inputs").get<std::string>(),
                         s.at("outcome").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("verdict: ") + e.what());
  }
  return v;
}

}  // namespace licvar
