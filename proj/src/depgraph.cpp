#include "licvar/depgraph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "licvar/errors.hpp"

namespace licvar {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

long to_long(const std::string& digits) { return digits.empty() ? 0 : std::stol(digits); }

// Compares release tuples with implicit trailing zeros.
std::strong_ordering compare_release(const std::vector<long>& a, const std::vector<long>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const long x = i < a.size() ? a[i] : 0;
    const long y = i < b.size() ? b[i] : 0;
    if (x != y) return x <=> y;
  }
  return std::strong_ordering::equal;
}

bool prefix_match(const std::vector<long>& release, const std::vector<long>& prefix) {
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if ((i < release.size() ? release[i] : 0) != prefix[i]) return false;
  }
  return true;
}

Specifier parse_specifier(const std::string& text, const std::string& context) {
  static const std::regex re(R"(^\s*(~=|==|!=|<=|>=|<|>)\s*([A-Za-z0-9.+_*-]+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw SchemaError(context + ": bad version specifier '" + text + "'");
  Specifier s;
  s.op = m[1];
  std::string version = m[2];
  if (version.size() > 2 && version.compare(version.size() - 2, 2, ".*") == 0) {
    if (s.op != "==" && s.op != "!=") throw SchemaError(context + ": wildcard only allowed with == or !=");
    s.wildcard = true;
    version.resize(version.size() - 2);
  }
  auto v = Version::parse(version);
  if (!v) throw SchemaError(context + ": bad version '" + version + "'");
  if (s.op == "~=" && v->release().size() < 2) {
    throw SchemaError(context + ": ~= needs at least two release segments");
  }
  s.version = *v;
  return s;
}

}  // namespace

std::string normalize_package_name(std::string_view name) {
  std::string out;
  bool sep = false;
  for (char c : trim(name)) {
    if (c == '-' || c == '_' || c == '.') {
      sep = true;
      continue;
    }
    if (sep && !out.empty()) out += '-';
    sep = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<Version> Version::parse(std::string_view text) {
  static const std::regex re(
      R"(^v?(\d+(?:\.\d+)*))"
      R"((?:[-_.]?(a|alpha|b|beta|rc|c|pre|preview)[-_.]?(\d*))?)"
      R"((?:[-_.]?(post|rev|r)[-_.]?(\d*))?)"
      R"((?:[-_.]?(dev)[-_.]?(\d*))?)"
      R"((?:\+[a-z0-9]+(?:[-_.][a-z0-9]+)*)?$)");
  const std::string t = lower(trim(text));
  std::smatch m;
  if (!std::regex_match(t, m, re)) return std::nullopt;
  Version v;
  v.text_ = trim(text);
  std::stringstream parts(m[1].str());
  for (std::string seg; std::getline(parts, seg, '.');) v.release_.push_back(to_long(seg));
  if (m[2].matched) {
    const std::string p = m[2];
    v.pre_phase_ = (p == "a" || p == "alpha") ? 0 : (p == "b" || p == "beta") ? 1 : 2;
    v.pre_number_ = to_long(m[3]);
  }
  if (m[4].matched) v.post_ = to_long(m[5]);
  if (m[6].matched) v.dev_ = to_long(m[7]);
  return v;
}

std::strong_ordering operator<=>(const Version& a, const Version& b) {
  if (auto c = compare_release(a.release_, b.release_); c != 0) return c;
  // A dev release of a final version sorts before its pre-releases.
  auto phase = [](const Version& v) {
    if (v.pre_phase_ < 0 && !v.post_ && v.dev_) return -1;
    return v.pre_phase_ < 0 ? 3 : v.pre_phase_;
  };
  if (auto c = phase(a) <=> phase(b); c != 0) return c;
  if (auto c = a.pre_number_ <=> b.pre_number_; c != 0) return c;
  if (auto c = a.post_.value_or(-1) <=> b.post_.value_or(-1); c != 0) return c;
  const long inf = std::numeric_limits<long>::max();
  return a.dev_.value_or(inf) <=> b.dev_.value_or(inf);
}

bool Specifier::matches(const Version& v) const {
  if (op == "==") return wildcard ? prefix_match(v.release(), version.release()) : v == version;
  if (op == "!=") return wildcard ? !prefix_match(v.release(), version.release()) : v != version;
  if (op == ">=") return v >= version;
  if (op == "<=") return v <= version;
  if (op == ">") return v > version;
  if (op == "<") return v < version;
  if (op == "~=") {
    const auto& r = version.release();
    return v >= version && prefix_match(v.release(), std::vector<long>(r.begin(), r.end() - 1));
  }
  return false;
}

std::string Specifier::to_string() const { return op + version.text() + (wildcard ? ".*" : ""); }

bool Requirement::matches(const Version& v) const {
  return std::all_of(specifiers.begin(), specifiers.end(), [&](const Specifier& s) { return s.matches(v); });
}

Requirement parse_requirement(std::string_view text) {
  static const std::regex re(R"(^\s*([A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?)\s*(?:\[([^\]]*)\])?\s*(.*)$)");
  Requirement r;
  r.raw = trim(text);
  std::string body = r.raw;
  if (auto semi = body.find(';'); semi != std::string::npos) {
    r.marker = trim(std::string_view(body).substr(semi + 1));
    body = trim(std::string_view(body).substr(0, semi));
  }
  std::smatch m;
  if (!std::regex_match(body, m, re)) throw SchemaError("bad requirement '" + r.raw + "'");
  r.name = normalize_package_name(m[1].str());
  if (m[2].matched) {
    std::stringstream extras(m[2].str());
    for (std::string e; std::getline(extras, e, ',');) {
      if (auto t = trim(e); !t.empty()) r.extras.push_back(t);
    }
  }
  std::string specs = trim(m[3].str());
  if (!specs.empty() && specs.front() == '@') throw SchemaError("direct URL requirements are not supported: '" + r.raw + "'");
  if (!specs.empty() && specs.front() == '(' && specs.back() == ')') specs = trim(specs.substr(1, specs.size() - 2));
  if (!specs.empty()) {
    std::stringstream parts(specs);
    for (std::string s; std::getline(parts, s, ',');) r.specifiers.push_back(parse_specifier(s, "requirement '" + r.raw + "'"));
  }
  return r;
}

PackageIndex PackageIndex::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw SchemaError(dir.string() + ": package index directory not found");
  std::vector<fs::path> files;
  for (const auto& pkg : fs::directory_iterator(dir)) {
    if (!pkg.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(pkg.path())) {
      if (f.is_regular_file() && f.path().extension() == ".json") files.push_back(f.path());
    }
  }
  std::sort(files.begin(), files.end());

  PackageIndex index;
  for (const auto& file : files) {
    const std::string where = file.string();
    std::ifstream in(file);
    if (!in) throw SchemaError(where + ": cannot open");
    PackageRelease rel;
    try {
      const nlohmann::json j = nlohmann::json::parse(in);
      rel.display_name = j.at("name").get<std::string>();
      rel.name = normalize_package_name(rel.display_name);
      if (rel.name != normalize_package_name(file.parent_path().filename().string())) {
        throw SchemaError(where + ": field 'name' does not match the directory name");
      }
      const std::string version = j.at("version").get<std::string>();
      auto v = Version::parse(version);
      if (!v) throw SchemaError(where + ": field 'version' is not a valid version: '" + version + "'");
      rel.version = *v;
      for (const auto& req : j.value("requires_dist", nlohmann::json::array())) {
        try {
          rel.requires_dist.push_back(parse_requirement(req.get<std::string>()));
        } catch (const SchemaError& e) {
          throw SchemaError(where + ": field 'requires_dist': " + e.what());
        }
      }
      if (j.contains("license") && !j.at("license").is_null()) rel.license = j.at("license").get<std::string>();
      rel.classifiers = j.value("classifiers", std::vector<std::string>{});
      if (j.contains("license_file") && !j.at("license_file").is_null()) {
        rel.license_file = j.at("license_file").get<std::string>();
      } else if (j.contains("license_file_path") && !j.at("license_file_path").is_null()) {
        const fs::path p = file.parent_path() / j.at("license_file_path").get<std::string>();
        std::ifstream lf(p, std::ios::binary);
        if (!lf) throw SchemaError(where + ": field 'license_file_path': cannot read " + p.string());
        std::ostringstream ss;
        ss << lf.rdbuf();
        rel.license_file = ss.str();
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
    try {
      index.add(std::move(rel));
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return index;
}

void PackageIndex::add(PackageRelease release) {
  auto& list = packages_[release.name];
  auto pos = std::lower_bound(list.begin(), list.end(), release.version,
                              [](const PackageRelease& r, const Version& v) { return r.version < v; });
  if (pos != list.end() && pos->version == release.version) {
    throw SchemaError("duplicate release " + release.name + " " + release.version.text());
  }
  list.insert(pos, std::move(release));
}

const PackageRelease* PackageIndex::find(std::string_view name, const Version& version) const {
  auto it = packages_.find(normalize_package_name(name));
  if (it == packages_.end()) return nullptr;
  for (const auto& r : it->second) {
    if (r.version == version) return &r;
  }
  return nullptr;
}

const PackageRelease* PackageIndex::find(std::string_view name, std::string_view version) const {
  auto v = Version::parse(version);
  return v ? find(name, *v) : nullptr;
}

std::vector<const PackageRelease*> PackageIndex::versions(std::string_view name) const {
  std::vector<const PackageRelease*> out;
  auto it = packages_.find(normalize_package_name(name));
  if (it != packages_.end()) {
    for (const auto& r : it->second) out.push_back(&r);
  }
  return out;
}

std::size_t PackageIndex::release_count() const {
  std::size_t n = 0;
  for (const auto& [_, list] : packages_) n += list.size();
  return n;
}

DependencyTree resolve(std::string_view name, std::string_view version, const PackageIndex& index) {
  const PackageRelease* root = index.find(name, version);
  if (!root) throw NotFoundError("package " + std::string(name) + " " + std::string(version) + " is not in the index");

  DependencyTree tree;
  tree.nodes.push_back({root->name, root->version.text(), 0, std::nullopt, {}});
  std::map<std::string, std::string> chosen{{root->name, root->version.text()}};
  std::deque<std::pair<const PackageRelease*, std::size_t>> queue{{root, 0}};

  while (!queue.empty()) {
    const auto [rel, depth] = queue.front();
    queue.pop_front();
    const std::string parent = rel->name + " " + rel->version.text();
    for (const Requirement& req : rel->requires_dist) {
      std::string note;
      if (!req.marker.empty()) note += "marker '" + req.marker + "' assumed true; ";
      if (!req.extras.empty()) note += "extras assumed available; ";

      if (auto it = chosen.find(req.name); it != chosen.end()) {
        note += "already resolved to " + it->second;
        if (!req.matches(*Version::parse(it->second))) note += ", which does not satisfy this requirement";
        tree.log.push_back({parent, req.raw, it->second, note});
        continue;
      }
      const PackageRelease* pick = nullptr;
      const PackageRelease* pick_pre = nullptr;
      const auto candidates = index.versions(req.name);
      for (auto it = candidates.rbegin(); it != candidates.rend() && !pick; ++it) {
        if (!req.matches((*it)->version)) continue;
        if (!(*it)->version.is_prerelease()) {
          pick = *it;
        } else if (!pick_pre) {
          pick_pre = *it;
        }
      }
      if (!pick) pick = pick_pre;
      if (!pick) {
        note += candidates.empty() ? "not in the index" : "no indexed version satisfies the requirement";
        tree.log.push_back({parent, req.raw, std::nullopt, note});
        continue;
      }
      note += "selected";
      tree.log.push_back({parent, req.raw, pick->version.text(), note});
      chosen.emplace(pick->name, pick->version.text());
      tree.nodes.push_back({pick->name, pick->version.text(), depth + 1, rel->name, req.raw});
      queue.emplace_back(pick, depth + 1);
    }
  }
  return tree;
}

std::string_view to_string(EvidenceKind k) {
  switch (k) {
    case EvidenceKind::kLicenseFile: return "license-file";
    case EvidenceKind::kMetadataField: return "metadata";
    case EvidenceKind::kClassifier: return "classifier";
  }
  return "?";
}

ClassifierTable ClassifierTable::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError(file.string() + ": cannot open");
  ClassifierTable table;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& [k, v] : j.at("classifiers").items()) table.map_.emplace(k, v.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }
  return table;
}

std::optional<std::string> ClassifierTable::lookup(std::string_view classifier) const {
  auto it = map_.find(trim(classifier));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::vector<LicenseEvidence> extract_license_sources(const PackageRelease& release, const ClassifierTable& table) {
  std::vector<LicenseEvidence> out;
  if (release.license_file && !trim(*release.license_file).empty()) {
    out.push_back({EvidenceKind::kLicenseFile, *release.license_file, std::nullopt});
  }
  if (release.license) {
    const std::string t = trim(*release.license);
    if (!t.empty() && lower(t) != "unknown") out.push_back({EvidenceKind::kMetadataField, t, std::nullopt});
  }
  for (const auto& c : release.classifiers) {
    if (c.rfind("License ::", 0) != 0) continue;
    out.push_back({EvidenceKind::kClassifier, trim(c), table.lookup(c)});
  }
  return out;
}

}  // namespace licvar
