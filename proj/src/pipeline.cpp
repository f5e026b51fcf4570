#include "licvar/pipeline.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <thread>

#include "licvar/errors.hpp"
#include "licvar/spdx.hpp"

namespace licvar {

namespace {

// Later versions an "-or-later" grant may be upgraded to, by KB id.
const std::map<std::string, std::vector<std::string>>& later_versions() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"GPL-2.0-only", {"GPL-3.0-only"}},
      {"LGPL-2.1-only", {"LGPL-3.0-only"}},
  };
  return m;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1));
}

// A metadata field holding a whole license rather than a name.
bool looks_like_license_text(std::string_view s) { return s.find('\n') != std::string_view::npos || s.size() > 200; }

bool counts_as_license(ComponentKind k) { return k == ComponentKind::kPrimaryLicense || k == ComponentKind::kReference; }

ResolvedComponent unknown_component(ComponentKind kind, EvidenceKind source, UnknownReason reason, std::string detail,
                                    std::size_t alternative) {
  ResolvedComponent c;
  c.kind = kind;
  c.source = source;
  c.unknown = reason;
  c.detail = std::move(detail);
  c.alternative = alternative;
  return c;
}

// Primary components grouped into alternatives, in index order.
std::vector<std::vector<const ResolvedComponent*>> alternatives(const LicenseResolution& r) {
  std::map<std::size_t, std::vector<const ResolvedComponent*>> groups;
  for (const auto& c : r.components) {
    if (counts_as_license(c.kind)) groups[c.alternative].push_back(&c);
  }
  std::vector<std::vector<const ResolvedComponent*>> out;
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  return out;
}

std::string join_ids(const std::vector<const ResolvedComponent*>& group) {
  std::string out;
  for (const auto* c : group) out += (out.empty() ? "" : " AND ") + c->display_id();
  return out;
}

bool default_core(const TermVector& t) {
  return t.provenance(TermKind::kCopyright) == Provenance::kDefault ||
         t.provenance(TermKind::kCopyleft) == Provenance::kDefault;
}

struct PairOutcome {
  EdgeStatus status = EdgeStatus::kCompatible;
  std::optional<UnknownReason> reason;
  std::string detail;
  std::optional<CompatibilityVerdict> verdict;
};

PairOutcome judge_pair(const ResolvedComponent& u, const ResolvedComponent& d, const ExceptionRuleTable& rules) {
  PairOutcome o;
  if (u.unknown || !u.parse) {
    o.status = EdgeStatus::kUnknown;
    o.reason = u.unknown.value_or(UnknownReason::kUnrecognizedLicense);
    o.detail = u.detail;
    return o;
  }
  const LicenseTerms up{u.license_id(), u.parse->term_vector, u.exception_tags};
  const LicenseTerms down{d.license_id(), d.parse->term_vector, d.exception_tags};
  try {
    o.verdict = check(up, down, rules);
  } catch (const UnknownLicenseError& e) {
    return {EdgeStatus::kUnknown, UnknownReason::kUnrecognizedLicense, e.what(), std::nullopt};
  } catch (const ValidationError& e) {
    return {EdgeStatus::kUnknown, UnknownReason::kBackendFailure, e.what(), std::nullopt};
  }
  if (o.verdict->incompatible()) {
    o.status = EdgeStatus::kIncompatible;
  } else if (default_core(up.terms) || default_core(down.terms)) {
    o.status = EdgeStatus::kUnknown;
    o.reason = UnknownReason::kDefaultProvenanceCoreTerm;
    o.detail = "copyright or copyleft of " + (default_core(up.terms) ? up.id : down.id) + " was not established";
  }
  return o;
}

nlohmann::json edge_to_json(const EdgeReport& e) {
  return {{"package", e.package},
          {"version", e.version},
          {"depth", e.depth},
          {"component", e.component ? nlohmann::json(*e.component) : nlohmann::json(nullptr)},
          {"upstream_license", e.upstream_license},
          {"chosen", e.chosen},
          {"downstream_license", e.downstream_license},
          {"status", to_string(e.status)},
          {"reason", e.reason ? nlohmann::json(to_string(*e.reason)) : nlohmann::json(nullptr)},
          {"detail", e.detail},
          {"verdict", e.verdict ? to_json(*e.verdict) : nlohmann::json(nullptr)}};
}

EdgeReport edge_from_json(const nlohmann::json& j) {
  EdgeReport e;
  e.package = j.at("package").get<std::string>();
  e.version = j.at("version").get<std::string>();
  e.depth = j.at("depth").get<std::size_t>();
  if (!j.at("component").is_null()) e.component = j.at("component").get<std::size_t>();
  e.upstream_license = j.at("upstream_license").get<std::string>();
  e.chosen = j.at("chosen").get<std::string>();
  e.downstream_license = j.at("downstream_license").get<std::string>();
  auto status = edge_status_from_string(j.at("status").get<std::string>());
  if (!status) throw SchemaError("scan report: unknown edge status " + j.at("status").dump());
  e.status = *status;
  if (!j.at("reason").is_null()) {
    auto reason = unknown_reason_from_string(j.at("reason").get<std::string>());
    if (!reason) throw SchemaError("scan report: unknown reason " + j.at("reason").dump());
    e.reason = *reason;
  }
  e.detail = j.at("detail").get<std::string>();
  if (!j.at("verdict").is_null()) e.verdict = verdict_from_json(j.at("verdict"));
  return e;
}

nlohmann::json counts_json(const StatusCounts& c) {
  return {{"incompatible", c.incompatible}, {"unknown", c.unknown}, {"compatible", c.compatible}};
}

StatusCounts count(const std::vector<EdgeReport>& edges) {
  StatusCounts c;
  for (const auto& e : edges) {
    switch (e.status) {
      case EdgeStatus::kIncompatible: ++c.incompatible; break;
      case EdgeStatus::kUnknown: ++c.unknown; break;
      case EdgeStatus::kCompatible: ++c.compatible; break;
    }
  }
  return c;
}

std::string edge_line(const EdgeReport& e) {
  std::string s = "  " + e.package + " " + e.version;
  if (e.component) s += " (third-party component " + std::to_string(*e.component) + ")";
  s += " [" + e.upstream_license + "]";
  if (e.verdict) s += " -> " + e.downstream_license + ": " + e.verdict->to_display();
  if (!e.chosen.empty() && e.chosen != e.upstream_license) s += ", via " + e.chosen;
  if (e.reason) s += "; " + std::string(to_string(*e.reason));
  if (!e.detail.empty()) s += " (" + e.detail + ")";
  return s + "\n";
}

}  // namespace

std::string_view to_string(UnknownReason r) {
  switch (r) {
    case UnknownReason::kUnrecognizedLicense: return "unrecognized-license";
    case UnknownReason::kVersionAmbiguous: return "version-ambiguous";
    case UnknownReason::kBackendFailure: return "backend-failure";
    case UnknownReason::kDefaultProvenanceCoreTerm: return "default-provenance-core-term";
  }
  return "?";
}

std::optional<UnknownReason> unknown_reason_from_string(std::string_view s) {
  for (auto r : {UnknownReason::kUnrecognizedLicense, UnknownReason::kVersionAmbiguous, UnknownReason::kBackendFailure,
                 UnknownReason::kDefaultProvenanceCoreTerm}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view to_string(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::kCompatible: return "Compatible";
    case EdgeStatus::kUnknown: return "Unknown";
    case EdgeStatus::kIncompatible: return "Incompatible";
  }
  return "?";
}

std::optional<EdgeStatus> edge_status_from_string(std::string_view s) {
  for (auto st : {EdgeStatus::kCompatible, EdgeStatus::kUnknown, EdgeStatus::kIncompatible}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string ResolvedComponent::license_id() const {
  if (spdx_id) return *spdx_id;
  if (parse) return parse->license_ref;
  return "?";
}

std::string ResolvedComponent::display_id() const {
  return exception_id ? license_id() + " WITH " + *exception_id : license_id();
}

bool LicenseResolution::unrecognized() const {
  for (const auto& group : alternatives(*this)) {
    if (std::none_of(group.begin(), group.end(), [](const auto* c) { return c->unknown.has_value(); })) return false;
  }
  return true;
}

std::string LicenseResolution::display() const {
  std::string out;
  for (const auto& group : alternatives(*this)) {
    const std::string ids = join_ids(group);
    out += (out.empty() ? "" : " OR ") + (group.size() > 1 ? "(" + ids + ")" : ids);
  }
  return out.empty() ? "?" : out;
}

EdgeStatus rollup(const std::vector<EdgeReport>& edges) {
  EdgeStatus s = EdgeStatus::kCompatible;
  for (const auto& e : edges) s = std::max(s, e.status);
  return s;
}

EdgeStatus ScanReport::package_status() const { return rollup(dependencies); }
EdgeStatus ScanReport::third_party_status() const { return rollup(third_party); }
StatusCounts ScanReport::dependency_counts() const { return count(dependencies); }
StatusCounts ScanReport::third_party_counts() const { return count(third_party); }

ScanConfig ScanConfig::with_data(const std::filesystem::path& data_dir) {
  ScanConfig cfg;
  cfg.exception_rules = ExceptionRuleTable::load(data_dir / "exception_rules.json");
  cfg.classifiers = ClassifierTable::load(data_dir / "classifiers.json");
  return cfg;
}

Scanner::Scanner(const KnowledgeBase& kb, const ModelGateway& gateway, ScanConfig cfg)
    : kb_(kb), gateway_(gateway), cfg_(std::move(cfg)) {
  cfg_.parser.check();
  if (cfg_.workers == 0) throw ValidationError("worker count must be at least 1");
}

Scanner::ParseOutcome Scanner::parse_cached(const std::string& text, std::uint64_t& calls) {
  std::promise<ParseOutcome> promise;
  std::shared_future<ParseOutcome> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = parse_cache_.find(text);
    if (it != parse_cache_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      parse_cache_.emplace(text, future);
      owner = true;
    }
  }
  if (owner) {
    ParseOutcome o;
    try {
      o.result = parse(text, kb_, gateway_, cfg_.parser);
      calls += o.result->model_calls;
    } catch (const ParseError& e) {
      o.reason = UnknownReason::kBackendFailure;
      o.error = e.what();
      calls += e.partial().model_calls;
    } catch (const ValidationError& e) {
      o.reason = UnknownReason::kUnrecognizedLicense;
      o.error = e.what();
    } catch (...) {
      promise.set_exception(std::current_exception());
      throw;
    }
    promise.set_value(std::move(o));
  }
  return future.get();
}

Scanner::SegmentOutcome Scanner::segment_cached(const std::string& text, std::uint64_t& calls) {
  std::promise<SegmentOutcome> promise;
  std::shared_future<SegmentOutcome> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = segment_cache_.find(text);
    if (it != segment_cache_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      segment_cache_.emplace(text, future);
      owner = true;
    }
  }
  if (owner) {
    SegmentOutcome o;
    try {
      o.components = gateway_.segment_license_file(text, &calls);
    } catch (const TransportError& e) {
      o.error = e.what();
    } catch (...) {
      promise.set_exception(std::current_exception());
      throw;
    }
    promise.set_value(std::move(o));
  }
  return future.get();
}

bool Scanner::resolve_id(const std::string& id, const std::optional<std::string>& exception, EvidenceKind source,
                         std::size_t alternative, LicenseResolution& out) {
  std::string base = id;
  if (ends_with(id, "-or-later")) base = id.substr(0, id.size() - 9) + "-only";
  const KbLicense* standard = kb_.find(base);
  if (!standard) return false;

  ParseOutcome p = parse_cached(standard->full_text, out.model_calls);
  if (!p.result) {
    out.components.push_back(
        unknown_component(ComponentKind::kPrimaryLicense, source, p.reason, p.error, alternative));
    return true;
  }
  ResolvedComponent c;
  c.kind = ComponentKind::kPrimaryLicense;
  c.source = source;
  c.text = standard->full_text;
  c.augmented = true;
  c.spdx_id = id;
  if (exception) {
    c.exception_id = *exception;
    c.exception_tags.push_back(spdx::exception_tag(*exception));
  }
  c.parse = std::move(p.result);
  c.alternative = alternative;
  if (base != id) {
    if (auto it = later_versions().find(base); it != later_versions().end()) {
      auto ids = c.parse->term_vector.list(TermKind::kCompatibleVersion);
      ids.insert(ids.end(), it->second.begin(), it->second.end());
      c.parse->term_vector.set(TermKind::kCompatibleVersion, TermValue::licenses(ids),
                               Provenance::kKnowledgeBaseReuse);
    }
  }
  out.components.push_back(std::move(c));
  return true;
}

void Scanner::resolve_text(const std::string& text, EvidenceKind source, LicenseResolution& out) {
  const SegmentOutcome seg = segment_cached(text, out.model_calls);
  if (!seg.error.empty()) {
    out.components.push_back(unknown_component(ComponentKind::kPrimaryLicense, source, UnknownReason::kBackendFailure,
                                               seg.error, 0));
    return;
  }
  std::size_t alt = 0;
  for (const LicenseComponent& comp : seg.components) {
    switch (comp.kind) {
      case ComponentKind::kNotice:
        break;
      case ComponentKind::kReference: {
        bool ambiguous = false;
        const auto id = spdx::find_license_mention(comp.text, &ambiguous);
        if (id && resolve_id(*id, std::nullopt, source, alt, out)) {
          out.components.back().kind = ComponentKind::kReference;
          out.augmentation_log.push_back({trim(comp.text), *id});
        } else {
          const UnknownReason r = ambiguous ? UnknownReason::kVersionAmbiguous : UnknownReason::kUnrecognizedLicense;
          out.components.push_back(unknown_component(
              ComponentKind::kReference, source, r,
              id ? "no canonical text for " + *id : "reference names no known license: \"" + trim(comp.text) + "\"",
              alt));
        }
        ++alt;
        break;
      }
      case ComponentKind::kPrimaryLicense:
      case ComponentKind::kThirdPartyLicense: {
        ParseOutcome p = parse_cached(comp.text, out.model_calls);
        ResolvedComponent c;
        c.kind = comp.kind;
        c.source = source;
        c.text = comp.text;
        if (p.result) {
          c.parse = std::move(p.result);
        } else {
          c.unknown = p.reason;
          c.detail = p.error;
        }
        if (comp.kind == ComponentKind::kPrimaryLicense) c.alternative = alt++;
        out.components.push_back(std::move(c));
        break;
      }
    }
  }
  if (alt == 0) {
    out.components.push_back(unknown_component(ComponentKind::kPrimaryLicense, source,
                                               UnknownReason::kUnrecognizedLicense,
                                               "license file contains no primary license", 0));
  }
}

LicenseResolution Scanner::resolve_license(const PackageRelease& release) {
  LicenseResolution out;
  out.package = release.display_name.empty() ? release.name : release.display_name;
  out.version = release.version.text();

  const auto evidence = extract_license_sources(release, cfg_.classifiers);
  bool ambiguous = false;
  std::vector<std::string> unresolved;
  std::vector<std::pair<std::string, std::string>> classifier_ids;  // (id, classifier)

  auto from_ids = [&](const spdx::Expression& expr, EvidenceKind source, const std::string& reference) {
    for (std::size_t a = 0; a < expr.size(); ++a) {
      for (const auto& term : expr[a]) {
        if (resolve_id(term.license, term.exception, source, a, out)) {
          out.augmentation_log.push_back({reference, term.license});
        } else {
          out.components.push_back(unknown_component(ComponentKind::kPrimaryLicense, source,
                                                     UnknownReason::kUnrecognizedLicense,
                                                     "no canonical text for " + term.license, a));
        }
      }
    }
  };

  for (const LicenseEvidence& e : evidence) {
    switch (e.kind) {
      case EvidenceKind::kLicenseFile:
        resolve_text(e.text, e.kind, out);
        return out;
      case EvidenceKind::kMetadataField: {
        if (looks_like_license_text(e.text)) {
          resolve_text(e.text, e.kind, out);
          return out;
        }
        if (auto expr = spdx::parse_expression(e.text)) {
          from_ids(*expr, e.kind, e.text);
          return out;
        }
        bool amb = false;
        if (auto id = spdx::resolve_name(e.text, &amb)) {
          from_ids({{{*id, std::nullopt}}}, e.kind, e.text);
          return out;
        }
        ambiguous = ambiguous || amb;
        unresolved.push_back("license field \"" + e.text + "\"");
        break;
      }
      case EvidenceKind::kClassifier:
        if (e.spdx && !e.spdx->empty()) {
          const std::string& id = *e.spdx;
          if (std::none_of(classifier_ids.begin(), classifier_ids.end(), [&](const auto& p) { return p.first == id; })) {
            classifier_ids.emplace_back(id, e.text);
          }
        } else {
          ambiguous = ambiguous || e.spdx.has_value();
          unresolved.push_back("classifier \"" + e.text + "\"");
        }
        break;
    }
  }
  if (!classifier_ids.empty()) {
    // Several license classifiers are read as alternatives.
    for (std::size_t a = 0; a < classifier_ids.size(); ++a) {
      const auto& [id, classifier] = classifier_ids[a];
      if (resolve_id(id, std::nullopt, EvidenceKind::kClassifier, a, out)) {
        out.augmentation_log.push_back({classifier, id});
      } else {
        out.components.push_back(unknown_component(ComponentKind::kPrimaryLicense, EvidenceKind::kClassifier,
                                                   UnknownReason::kUnrecognizedLicense, "no canonical text for " + id,
                                                   a));
      }
    }
    return out;
  }

  std::string detail;
  for (const auto& u : unresolved) detail += (detail.empty() ? "" : "; ") + u;
  if (detail.empty()) detail = "no license evidence";
  if (ambiguous) detail += " names a license family without a version";
  const EvidenceKind source = evidence.empty() ? EvidenceKind::kMetadataField : evidence.front().kind;
  out.components.push_back(unknown_component(
      ComponentKind::kPrimaryLicense, source,
      ambiguous ? UnknownReason::kVersionAmbiguous : UnknownReason::kUnrecognizedLicense, detail, 0));
  return out;
}

EdgeReport judge_edge(const LicenseResolution& upstream, const LicenseResolution& root,
                      const ExceptionRuleTable& rules) {
  EdgeReport e;
  e.package = upstream.package;
  e.version = upstream.version;
  e.upstream_license = upstream.display();
  e.downstream_license = root.display();

  const auto root_alts = alternatives(root);
  const std::vector<const ResolvedComponent*> root_group = root_alts.empty() ? std::vector<const ResolvedComponent*>{}
                                                                             : root_alts.front();
  for (const auto* d : root_group) {
    if (d->unknown || !d->parse) {
      e.status = EdgeStatus::kUnknown;
      e.reason = d->unknown.value_or(UnknownReason::kUnrecognizedLicense);
      e.detail = "root license unresolved: " + d->detail;
      return e;
    }
  }
  if (root_group.empty()) {
    e.status = EdgeStatus::kUnknown;
    e.reason = UnknownReason::kUnrecognizedLicense;
    e.detail = "root license unresolved";
    return e;
  }
  e.downstream_license = join_ids(root_group);

  std::optional<PairOutcome> best;
  for (const auto& group : alternatives(upstream)) {
    PairOutcome worst;
    bool first = true;
    for (const auto* u : group) {
      for (const auto* d : root_group) {
        PairOutcome o = judge_pair(*u, *d, rules);
        if (first || o.status > worst.status) worst = std::move(o);
        first = false;
      }
    }
    if (!best || worst.status < best->status) {
      best = std::move(worst);
      e.chosen = join_ids(group);
    }
    if (best->status == EdgeStatus::kCompatible) break;
  }
  if (!best) {
    e.status = EdgeStatus::kUnknown;
    e.reason = UnknownReason::kUnrecognizedLicense;
    e.detail = "no license components";
    return e;
  }
  e.status = best->status;
  e.reason = best->reason;
  e.detail = best->detail;
  e.verdict = best->verdict;
  return e;
}

ScanReport Scanner::scan(std::string_view name, std::string_view version, const PackageIndex& index) {
  const DependencyTree tree = resolve(name, version, index);
  const std::size_t n = tree.nodes.size();
  std::vector<LicenseResolution> res(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const TreeNode& node = tree.nodes[i];
        res[i] = resolve_license(*index.find(node.name, node.version));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(cfg_.workers, n);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ScanReport report;
  report.root = res[0].package;
  report.root_version = res[0].version;
  report.root_license = res[0].display();
  report.resolution_log = tree.log;
  for (std::size_t i = 0; i < n; ++i) {
    report.model_calls += res[i].model_calls;
    for (const auto& a : res[i].augmentation_log) {
      report.notes.push_back(res[i].package + " " + res[i].version + ": \"" + a.reference +
                             "\" resolved to the canonical text of " + a.license_id);
    }
    if (i > 0) {
      EdgeReport e = judge_edge(res[i], res[0], cfg_.exception_rules);
      e.depth = tree.nodes[i].depth;
      report.dependencies.push_back(std::move(e));
    }
    for (std::size_t k = 0; k < res[i].components.size(); ++k) {
      const ResolvedComponent& c = res[i].components[k];
      if (c.kind != ComponentKind::kThirdPartyLicense) continue;
      LicenseResolution single{res[i].package, res[i].version, {c}, {}, 0};
      single.components.front().kind = ComponentKind::kPrimaryLicense;
      single.components.front().alternative = 0;
      EdgeReport e = judge_edge(single, res[0], cfg_.exception_rules);
      e.depth = tree.nodes[i].depth;
      e.component = k;
      report.third_party.push_back(std::move(e));
    }
  }
  return report;
}

LicenseResolution resolve_license(const PackageRelease& release, const KnowledgeBase& kb, const ModelGateway& gateway,
                                  const ScanConfig& cfg) {
  return Scanner(kb, gateway, cfg).resolve_license(release);
}

ScanReport scan(std::string_view name, std::string_view version, const PackageIndex& index, const KnowledgeBase& kb,
                const ModelGateway& gateway, const ScanConfig& cfg) {
  return Scanner(kb, gateway, cfg).scan(name, version, index);
}

nlohmann::json to_json(const LicenseResolution& r) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : r.components) {
    nlohmann::json j = {{"kind", to_string(c.kind)},
                        {"source", to_string(c.source)},
                        {"license", c.display_id()},
                        {"augmented", c.augmented},
                        {"alternative", c.alternative},
                        {"exception_tags", c.exception_tags}};
    if (c.parse) j["parse"] = to_json(*c.parse);
    if (c.unknown) {
      j["unknown"] = to_string(*c.unknown);
      j["detail"] = c.detail;
    }
    comps.push_back(std::move(j));
  }
  nlohmann::json aug = nlohmann::json::array();
  for (const auto& a : r.augmentation_log) aug.push_back({{"reference", a.reference}, {"license", a.license_id}});
  return {{"package", r.package},   {"version", r.version},         {"license", r.display()},
          {"components", comps},    {"augmentation_log", aug},      {"model_calls", r.model_calls}};
}

nlohmann::json to_json(const ScanReport& r) {
  nlohmann::json deps = nlohmann::json::array();
  for (const auto& e : r.dependencies) deps.push_back(edge_to_json(e));
  nlohmann::json third = nlohmann::json::array();
  for (const auto& e : r.third_party) third.push_back(edge_to_json(e));
  nlohmann::json log = nlohmann::json::array();
  for (const auto& l : r.resolution_log) {
    log.push_back({{"parent", l.parent},
                   {"requirement", l.requirement},
                   {"chosen", l.chosen ? nlohmann::json(*l.chosen) : nlohmann::json(nullptr)},
                   {"note", l.note}});
  }
  return {{"schema_version", 1},
          {"root", {{"name", r.root}, {"version", r.root_version}, {"license", r.root_license}}},
          {"package_status", to_string(r.package_status())},
          {"third_party_status", to_string(r.third_party_status())},
          {"counts", {{"dependencies", counts_json(r.dependency_counts())},
                      {"third_party", counts_json(r.third_party_counts())}}},
          {"dependencies", deps},
          {"third_party", third},
          {"resolution_log", log},
          {"notes", r.notes},
          {"model_calls", r.model_calls}};
}

ScanReport scan_report_from_json(const nlohmann::json& j) {
  ScanReport r;
  try {
    if (j.at("schema_version").get<int>() != 1) throw SchemaError("scan report: unsupported schema_version");
    r.root = j.at("root").at("name").get<std::string>();
    r.root_version = j.at("root").at("version").get<std::string>();
    r.root_license = j.at("root").at("license").get<std::string>();
    for (const auto& e : j.at("dependencies")) r.dependencies.push_back(edge_from_json(e));
    for (const auto& e : j.at("third_party")) r.third_party.push_back(edge_from_json(e));
    for (const auto& l : j.at("resolution_log")) {
      ResolutionLogEntry entry;
      entry.parent = l.at("parent").get<std::string>();
      entry.requirement = l.at("requirement").get<std::string>();
      if (!l.at("chosen").is_null()) entry.chosen = l.at("chosen").get<std::string>();
      entry.note = l.at("note").get<std::string>();
      r.resolution_log.push_back(std::move(entry));
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
    r.model_calls = j.at("model_calls").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("scan report: ") + e.what());
  }
  return r;
}

std::string report_render(const ScanReport& report, ReportFormat format, bool explain) {
  if (format == ReportFormat::kJson) return to_json(report).dump(2) + "\n";

  std::ostringstream out;
  out << "Scan of " << report.root << " " << report.root_version << " (license: " << report.root_license << ")\n";
  const StatusCounts d = report.dependency_counts();
  const StatusCounts t = report.third_party_counts();
  out << "Package: " << to_string(report.package_status()) << "\n";
  out << "Dependencies: " << d.total() << " checked, " << d.incompatible << " incompatible, " << d.unknown
      << " unknown, " << d.compatible << " compatible\n";
  out << "Third-party: " << t.total() << " checked, " << t.incompatible << " incompatible, " << t.unknown
      << " unknown, " << t.compatible << " compatible\n";
  out << "Model calls: " << report.model_calls << "\n";

  auto section = [&](const char* title, const std::vector<EdgeReport>& edges, EdgeStatus status) {
    bool header = false;
    for (const auto& e : edges) {
      if (e.status != status) continue;
      if (!header) out << "\n" << title << ":\n";
      header = true;
      out << edge_line(e);
      if (explain && e.verdict) {
        for (const auto& step : e.verdict->trace) {
          out << "      " << step.rule << ": " << step.inputs << " => " << step.outcome << "\n";
        }
      }
    }
  };
  section("Incompatible dependencies", report.dependencies, EdgeStatus::kIncompatible);
  section("Unknown dependencies", report.dependencies, EdgeStatus::kUnknown);
  section("Incompatible third-party components", report.third_party, EdgeStatus::kIncompatible);
  section("Unknown third-party components", report.third_party, EdgeStatus::kUnknown);
  if (explain) {
    section("Compatible dependencies", report.dependencies, EdgeStatus::kCompatible);
    section("Compatible third-party components", report.third_party, EdgeStatus::kCompatible);
    if (!report.resolution_log.empty()) {
      out << "\nResolution log:\n";
      for (const auto& l : report.resolution_log) {
        out << "  " << l.parent << ": " << l.requirement << " -> " << l.chosen.value_or("-") << " (" << l.note
            << ")\n";
      }
    }
    if (!report.notes.empty()) {
      out << "\nNotes:\n";
      for (const auto& n : report.notes) out << "  " << n << "\n";
    }
  }
  return out.str();
}

int exit_code(const ScanReport& report) {
  switch (std::max(report.package_status(), report.third_party_status())) {
    case EdgeStatus::kCompatible: return 0;
    case EdgeStatus::kIncompatible: return 1;
    case EdgeStatus::kUnknown: return 2;
  }
  return 3;
}

}  // namespace licvar
