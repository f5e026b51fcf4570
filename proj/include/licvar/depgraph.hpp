#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace licvar {

// Lowercase, with runs of '-', '_' and '.' folded to one '-'.
std::string normalize_package_name(std::string_view name);

// Version subset: N(.N)*[{a|b|rc}N][.postN][.devN], with an optional
// leading 'v' and an ignored local part ("+...").
class Version {
 public:
  static std::optional<Version> parse(std::string_view text);

  const std::string& text() const { return text_; }
  const std::vector<long>& release() const { return release_; }
  bool is_prerelease() const { return pre_phase_ >= 0 || dev_.has_value(); }

  friend std::strong_ordering operator<=>(const Version& a, const Version& b);
  friend bool operator==(const Version& a, const Version& b) { return (a <=> b) == 0; }

 private:
  std::string text_;
  std::vector<long> release_;
  int pre_phase_ = -1;  // 0 a, 1 b, 2 rc; -1 none
  long pre_number_ = 0;
  std::optional<long> post_;
  std::optional<long> dev_;
};

struct Specifier {
  std::string op;  // ==, !=, >=, <=, >, <, ~=
  Version version;
  bool wildcard = false;  // "==1.2.*" / "!=1.2.*"

  bool matches(const Version& v) const;
  std::string to_string() const;
};

struct Requirement {
  std::string name;  // normalized
  std::vector<Specifier> specifiers;  // all must match; empty: any version
  std::vector<std::string> extras;
  std::string marker;  // text after ';', empty if none
  std::string raw;

  bool matches(const Version& v) const;
};

// Throws SchemaError on malformed input.
Requirement parse_requirement(std::string_view text);

struct PackageRelease {
  std::string name;  // normalized
  std::string display_name;
  Version version;
  std::vector<Requirement> requires_dist;
  std::optional<std::string> license;       // metadata field
  std::vector<std::string> classifiers;
  std::optional<std::string> license_file;  // text of the shipped license file
};

// Release metadata read from <dir>/<name>/<version>.json with fields
// name, version, requires_dist, license, classifiers, and either
// license_file (inline text) or license_file_path (relative to the json).
class PackageIndex {
 public:
  // Throws SchemaError naming the file on malformed metadata or duplicates.
  static PackageIndex load(const std::filesystem::path& dir);
  void add(PackageRelease release);  // throws SchemaError on duplicates

  const PackageRelease* find(std::string_view name, const Version& version) const;
  const PackageRelease* find(std::string_view name, std::string_view version) const;
  // Ascending version order.
  std::vector<const PackageRelease*> versions(std::string_view name) const;
  std::size_t package_count() const { return packages_.size(); }
  std::size_t release_count() const;

 private:
  std::map<std::string, std::vector<PackageRelease>> packages_;  // sorted by version
};

struct TreeNode {
  std::string name;
  std::string version;
  std::size_t depth = 0;
  std::optional<std::string> parent;  // none for the root
  std::string specifier;              // requirement text that selected it
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct ResolutionLogEntry {
  std::string parent;
  std::string requirement;
  std::optional<std::string> chosen;  // version, or none when unresolved/skipped
  std::string note;
  friend bool operator==(const ResolutionLogEntry&, const ResolutionLogEntry&) = default;
};

struct DependencyTree {
  std::vector<TreeNode> nodes;  // breadth-first; nodes[0] is the root
  std::vector<ResolutionLogEntry> log;
  const TreeNode& root() const { return nodes.front(); }
};

// Breadth-first resolution without backtracking: each requirement takes the
// highest index version that satisfies it, preferring final releases; a name
// resolves once and later requirements on it are only logged. Throws
// NotFoundError when the root is not in the index.
DependencyTree resolve(std::string_view name, std::string_view version, const PackageIndex& index);

enum class EvidenceKind { kLicenseFile, kMetadataField, kClassifier };
std::string_view to_string(EvidenceKind k);

struct LicenseEvidence {
  EvidenceKind kind;
  std::string text;
  // Classifiers only: the mapped SPDX id; empty when the classifier names a
  // family without a version. Unset when the classifier is not in the table.
  std::optional<std::string> spdx;
};

// Trove classifier to SPDX table.
class ClassifierTable {
 public:
  static ClassifierTable load(const std::filesystem::path& file);
  // nullopt: not a known classifier; "": known but version-ambiguous.
  std::optional<std::string> lookup(std::string_view classifier) const;

 private:
  std::map<std::string, std::string, std::less<>> map_;
};

// License file, then metadata field, then license classifiers. Empty means
// the release is unrecognized.
std::vector<LicenseEvidence> extract_license_sources(const PackageRelease& release, const ClassifierTable& table);

}  // namespace licvar
