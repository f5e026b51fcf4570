#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "licvar/compat.hpp"
#include "licvar/depgraph.hpp"
#include "licvar/knowledge_base.hpp"
#include "licvar/model_gateway.hpp"
#include "licvar/parser.hpp"

namespace licvar {

enum class UnknownReason { kUnrecognizedLicense, kVersionAmbiguous, kBackendFailure, kDefaultProvenanceCoreTerm };
std::string_view to_string(UnknownReason r);
std::optional<UnknownReason> unknown_reason_from_string(std::string_view s);

enum class EdgeStatus { kCompatible, kUnknown, kIncompatible };
std::string_view to_string(EdgeStatus s);
std::optional<EdgeStatus> edge_status_from_string(std::string_view s);

struct ResolvedComponent {
  ComponentKind kind = ComponentKind::kPrimaryLicense;
  EvidenceKind source = EvidenceKind::kLicenseFile;
  std::string text;  // canonical text when augmented
  bool augmented = false;
  std::optional<std::string> spdx_id;  // set when the license was named by id
  std::optional<std::string> exception_id;  // "WITH" clause as written
  std::vector<std::string> exception_tags;
  std::optional<ParseResult> parse;  // unset: unrecognized, see `unknown`
  std::optional<UnknownReason> unknown;
  std::string detail;
  // Primary components with the same index are conjoined (AND); different
  // indices are alternatives (OR). Unused for third-party components.
  std::size_t alternative = 0;

  // SPDX id when named by id, else the parser's license_ref; "?" when unknown.
  std::string license_id() const;
  // license_id() plus any "WITH" clause.
  std::string display_id() const;
};

struct AugmentationEntry {
  std::string reference;  // text of the reference component
  std::string license_id;
};

struct LicenseResolution {
  std::string package;
  std::string version;
  // Never empty: an unusable release yields one unrecognized component.
  std::vector<ResolvedComponent> components;
  std::vector<AugmentationEntry> augmentation_log;
  std::uint64_t model_calls = 0;  // calls issued for this resolution (cache misses only)

  bool unrecognized() const;
  std::string display() const;  // "MIT", "MIT OR Apache-2.0", "?"
};

struct EdgeReport {
  std::string package;
  std::string version;
  std::size_t depth = 0;
  std::optional<std::size_t> component;  // third-party component index within the package
  std::string upstream_license;          // display form of the whole resolution
  std::string chosen;                    // alternative that decided the verdict
  std::string downstream_license;
  EdgeStatus status = EdgeStatus::kUnknown;
  std::optional<UnknownReason> reason;
  std::string detail;
  std::optional<CompatibilityVerdict> verdict;  // deciding pair
  friend bool operator==(const EdgeReport&, const EdgeReport&) = default;
};

struct StatusCounts {
  std::size_t incompatible = 0;
  std::size_t unknown = 0;
  std::size_t compatible = 0;
  std::size_t total() const { return incompatible + unknown + compatible; }
};

struct ScanReport {
  std::string root;
  std::string root_version;
  std::string root_license;
  std::vector<EdgeReport> dependencies;  // breadth-first tree order
  std::vector<EdgeReport> third_party;
  std::vector<ResolutionLogEntry> resolution_log;
  std::vector<std::string> notes;
  std::uint64_t model_calls = 0;

  // Incompatible if any dependency edge is, else Unknown if any is, else Compatible.
  EdgeStatus package_status() const;
  EdgeStatus third_party_status() const;
  StatusCounts dependency_counts() const;
  StatusCounts third_party_counts() const;
  friend bool operator==(const ScanReport&, const ScanReport&) = default;
};

// Rollup rule shared by the package and third-party groupings.
EdgeStatus rollup(const std::vector<EdgeReport>& edges);

struct ScanConfig {
  ParserConfig parser;
  std::size_t workers = 4;
  ExceptionRuleTable exception_rules;
  ClassifierTable classifiers;

  // Rule tables from <data_dir>/exception_rules.json and classifiers.json.
  static ScanConfig with_data(const std::filesystem::path& data_dir);
};

// Owns the content-hash caches shared by concurrent resolutions.
class Scanner {
 public:
  Scanner(const KnowledgeBase& kb, const ModelGateway& gateway, ScanConfig cfg);

  LicenseResolution resolve_license(const PackageRelease& release);
  // Throws NotFoundError when the root is not in the index.
  ScanReport scan(std::string_view name, std::string_view version, const PackageIndex& index);

  const ScanConfig& config() const { return cfg_; }

 private:
  struct ParseOutcome {
    std::optional<ParseResult> result;
    UnknownReason reason = UnknownReason::kUnrecognizedLicense;
    std::string error;
  };
  struct SegmentOutcome {
    std::vector<LicenseComponent> components;
    std::string error;  // non-empty on transport failure
  };

  ParseOutcome parse_cached(const std::string& text, std::uint64_t& calls);
  SegmentOutcome segment_cached(const std::string& text, std::uint64_t& calls);
  void resolve_text(const std::string& text, EvidenceKind source, LicenseResolution& out);
  bool resolve_id(const std::string& id, const std::optional<std::string>& exception, EvidenceKind source,
                  std::size_t alternative, LicenseResolution& out);

  const KnowledgeBase& kb_;
  const ModelGateway& gateway_;
  ScanConfig cfg_;
  std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<ParseOutcome>> parse_cache_;
  std::unordered_map<std::string, std::shared_future<SegmentOutcome>> segment_cache_;
};

// Judges one upstream resolution against the root's. Alternatives of the
// upstream are tried in order and the best status wins; within an
// alternative every conjunct must hold against every root conjunct.
EdgeReport judge_edge(const LicenseResolution& upstream, const LicenseResolution& root,
                      const ExceptionRuleTable& rules);

// One-shot helpers over a fresh Scanner.
LicenseResolution resolve_license(const PackageRelease& release, const KnowledgeBase& kb,
                                  const ModelGateway& gateway, const ScanConfig& cfg);
ScanReport scan(std::string_view name, std::string_view version, const PackageIndex& index, const KnowledgeBase& kb,
                const ModelGateway& gateway, const ScanConfig& cfg);

nlohmann::json to_json(const LicenseResolution& r);
nlohmann::json to_json(const ScanReport& r);
// Throws SchemaError on malformed input.
ScanReport scan_report_from_json(const nlohmann::json& j);

enum class ReportFormat { kHuman, kJson };
std::string report_render(const ScanReport& report, ReportFormat format, bool explain = false);

// 0 all compatible, 1 any incompatibility (dependency or third-party),
// 2 unknowns only.
int exit_code(const ScanReport& report);

}  // namespace licvar
