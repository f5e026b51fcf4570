#include <doctest.h>

#include <random>

#include "licvar/errors.hpp"
#include "licvar/pipeline.hpp"
#include "test_support.hpp"

using namespace licvar;
using licvar::testing::fenced;
using licvar::testing::ScriptedBackend;

namespace {

const KnowledgeBase& kb() { return *testing::mock_runtime().kb; }

const ScanConfig& config() {
  static const ScanConfig cfg = ScanConfig::with_data(testing::data_dir());
  return cfg;
}

std::string fixture_text(const std::string& name) { return testing::read_text(testing::fixtures() / "texts" / name); }

PackageRelease pkg(const std::string& name, const std::string& version) {
  PackageRelease r;
  r.name = normalize_package_name(name);
  r.display_name = name;
  r.version = *Version::parse(version);
  return r;
}

PackageRelease with_license(PackageRelease r, std::string license) {
  r.license = std::move(license);
  return r;
}

PackageRelease with_file(PackageRelease r, std::string text) {
  r.license_file = std::move(text);
  return r;
}

PackageRelease with_requires(PackageRelease r, const std::vector<std::string>& reqs) {
  for (const auto& q : reqs) r.requires_dist.push_back(parse_requirement(q));
  return r;
}

const EdgeReport& edge(const ScanReport& r, const std::string& package) {
  for (const auto& e : r.dependencies) {
    if (e.package == package) return e;
  }
  FAIL("no edge for " << package);
  throw std::logic_error("unreachable");
}

// Small index around a GPL-3.0 application.
PackageIndex app_index() {
  PackageIndex index;
  index.add(with_requires(with_license(pkg("app", "1.0"), "GPL-3.0-only"),
                          {"leaf-mit", "leaf-gpl2", "leaf-dual", "leaf-acme", "leaf-none", "leaf-bsd", "leaf-custom"}));
  index.add(with_file(pkg("leaf-mit", "1.0"), kb().get("MIT").full_text));
  index.add(with_license(pkg("leaf-gpl2", "1.0"), "GPL-2.0-only"));
  index.add(with_license(pkg("leaf-dual", "1.0"), "GPL-2.0-only OR MIT"));
  index.add(with_file(pkg("leaf-acme", "3.0"), fixture_text("acme-sdk.txt")));
  index.add(pkg("leaf-none", "0.1"));
  index.add(with_license(pkg("leaf-bsd", "2.0"), "BSD"));
  index.add(with_file(pkg("leaf-custom", "1.0"), "Anyone may use this program for any purpose.\n"));
  return index;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("status and reason strings") {
  for (auto r : {UnknownReason::kUnrecognizedLicense, UnknownReason::kVersionAmbiguous, UnknownReason::kBackendFailure,
                 UnknownReason::kDefaultProvenanceCoreTerm}) {
    CHECK(unknown_reason_from_string(to_string(r)) == r);
  }
  CHECK(to_string(UnknownReason::kVersionAmbiguous) == "version-ambiguous");
  for (auto s : {EdgeStatus::kCompatible, EdgeStatus::kUnknown, EdgeStatus::kIncompatible}) {
    CHECK(edge_status_from_string(to_string(s)) == s);
  }
  CHECK(EdgeStatus::kCompatible < EdgeStatus::kUnknown);
  CHECK(EdgeStatus::kUnknown < EdgeStatus::kIncompatible);
}

TEST_CASE("a verbatim license file resolves through the KB") {
  auto rt = testing::fresh_mock_runtime();
  Scanner s(kb(), *rt.gateway, config());
  auto r = s.resolve_license(with_file(pkg("a", "1.0"), kb().get("MIT").full_text));
  REQUIRE(r.components.size() == 1);
  const auto& c = r.components[0];
  CHECK(c.kind == ComponentKind::kPrimaryLicense);
  CHECK(c.source == EvidenceKind::kLicenseFile);
  REQUIRE(c.parse);
  CHECK(c.parse->model_calls == 0);
  CHECK(c.license_id() == "MIT");
  CHECK(r.display() == "MIT");
  CHECK_FALSE(r.unrecognized());
  // Only the segmentation request reaches the model.
  CHECK(r.model_calls == 1);
  CHECK(rt.gateway->calls() == 1);
}

TEST_CASE("metadata identifiers are augmented with canonical text") {
  auto rt = testing::fresh_mock_runtime();
  Scanner s(kb(), *rt.gateway, config());

  auto mit = s.resolve_license(with_license(pkg("a", "1.0"), "MIT"));
  REQUIRE(mit.components.size() == 1);
  CHECK(mit.components[0].augmented);
  CHECK(mit.components[0].spdx_id == std::optional<std::string>("MIT"));
  CHECK(mit.components[0].text == kb().get("MIT").full_text);
  CHECK(mit.augmentation_log.size() == 1);
  CHECK(mit.model_calls == 0);

  auto dual = s.resolve_license(with_license(pkg("b", "1.0"), "MIT OR Apache-2.0"));
  REQUIRE(dual.components.size() == 2);
  CHECK(dual.components[0].alternative == 0);
  CHECK(dual.components[1].alternative == 1);
  CHECK(dual.display() == "MIT OR Apache-2.0");

  auto named = s.resolve_license(with_license(pkg("c", "1.0"), "Apache License 2.0"));
  CHECK(named.display() == "Apache-2.0");

  auto later = s.resolve_license(with_license(pkg("d", "1.0"), "GPL-2.0-or-later"));
  REQUIRE(later.components.size() == 1);
  CHECK(later.components[0].license_id() == "GPL-2.0-or-later");
  CHECK(later.components[0].parse->term_vector.list(TermKind::kCompatibleVersion) ==
        std::vector<std::string>{"GPL-3.0-only"});

  auto with = s.resolve_license(with_license(pkg("e", "1.0"), "GPL-2.0-only WITH Classpath-exception-2.0"));
  REQUIRE(with.components.size() == 1);
  CHECK(with.components[0].exception_tags == std::vector<std::string>{"Classpath"});
  CHECK(with.components[0].display_id() == "GPL-2.0-only WITH Classpath-exception-2.0");
  CHECK(rt.gateway->calls() == 0);
}

TEST_CASE("unusable evidence yields an unrecognized component") {
  auto& rt = testing::mock_runtime();
  Scanner s(kb(), *rt.gateway, config());

  auto bsd = s.resolve_license(with_license(pkg("a", "1.0"), "BSD"));
  REQUIRE(bsd.components.size() == 1);
  CHECK(bsd.unrecognized());
  CHECK(bsd.components[0].unknown == UnknownReason::kVersionAmbiguous);
  CHECK(bsd.display() == "?");

  auto none = s.resolve_license(pkg("b", "1.0"));
  REQUIRE(none.components.size() == 1);
  CHECK(none.components[0].unknown == UnknownReason::kUnrecognizedLicense);
  CHECK(none.components[0].detail == "no license evidence");

  auto zlib = s.resolve_license(with_license(pkg("c", "1.0"), "Zlib"));
  CHECK(zlib.components[0].unknown == UnknownReason::kUnrecognizedLicense);
  CHECK(zlib.components[0].detail.find("no canonical text") != std::string::npos);

  auto family = pkg("d", "1.0");
  family.classifiers = {"License :: OSI Approved :: BSD License"};
  CHECK(s.resolve_license(family).components[0].unknown == UnknownReason::kVersionAmbiguous);
}

TEST_CASE("classifiers are read as alternatives") {
  auto& rt = testing::mock_runtime();
  Scanner s(kb(), *rt.gateway, config());
  auto r = pkg("a", "1.0");
  r.classifiers = {"License :: OSI Approved :: MIT License",
                   "License :: OSI Approved :: Mozilla Public License 2.0 (MPL 2.0)"};
  auto res = s.resolve_license(r);
  CHECK(res.display() == "MIT OR MPL-2.0");
  CHECK(res.augmentation_log.size() == 2);
  CHECK(res.components[0].source == EvidenceKind::kClassifier);
}

TEST_CASE("license files are segmented into components") {
  auto& rt = testing::mock_runtime();
  Scanner s(kb(), *rt.gateway, config());

  auto bundle = s.resolve_license(with_file(pkg("a", "1.0"), fixture_text("bundle-mit-bsd3.txt")));
  REQUIRE(bundle.components.size() == 2);
  CHECK(bundle.components[0].kind == ComponentKind::kPrimaryLicense);
  CHECK(bundle.components[0].license_id() == "MIT");
  CHECK(bundle.components[1].kind == ComponentKind::kThirdPartyLicense);
  CHECK(bundle.components[1].license_id() == "BSD-3-Clause");
  CHECK(bundle.display() == "MIT");

  auto dual = s.resolve_license(with_file(pkg("b", "1.0"), fixture_text("dual-mit-gpl3.txt")));
  CHECK(dual.display() == "MIT OR GPL-3.0-only");

  auto ref = s.resolve_license(with_file(pkg("c", "1.0"), fixture_text("reference-apache.txt")));
  REQUIRE(ref.components.size() == 1);
  CHECK(ref.components[0].kind == ComponentKind::kReference);
  CHECK(ref.components[0].license_id() == "Apache-2.0");
  CHECK(ref.components[0].augmented);
  REQUIRE(ref.augmentation_log.size() == 1);
  CHECK(ref.augmentation_log[0].license_id == "Apache-2.0");

  // A long metadata field is license text, not a name.
  auto inline_text = s.resolve_license(with_license(pkg("d", "1.0"), kb().get("ISC").full_text));
  CHECK(inline_text.display() == "ISC");
  CHECK(inline_text.components[0].source == EvidenceKind::kMetadataField);
}

TEST_CASE("edges against a GPL-3.0 root") {
  auto rt = testing::fresh_mock_runtime();
  Scanner s(kb(), *rt.gateway, config());
  auto index = app_index();
  auto report = s.scan("app", "1.0", index);

  CHECK(report.root == "app");
  CHECK(report.root_license == "GPL-3.0-only");
  CHECK(report.dependencies.size() == 7);

  CHECK(edge(report, "leaf-mit").status == EdgeStatus::kCompatible);
  CHECK(edge(report, "leaf-mit").verdict->to_display() == "S");
  CHECK(edge(report, "leaf-gpl2").status == EdgeStatus::kIncompatible);

  const auto& dual = edge(report, "leaf-dual");
  CHECK(dual.status == EdgeStatus::kCompatible);
  CHECK(dual.chosen == "MIT");
  CHECK(dual.upstream_license == "GPL-2.0-only OR MIT");

  CHECK(edge(report, "leaf-acme").status == EdgeStatus::kIncompatible);
  CHECK(edge(report, "leaf-none").status == EdgeStatus::kUnknown);
  CHECK(edge(report, "leaf-none").reason == UnknownReason::kUnrecognizedLicense);
  CHECK(edge(report, "leaf-bsd").reason == UnknownReason::kVersionAmbiguous);

  // A permissive-looking custom text never states its copyleft level.
  const auto& custom = edge(report, "leaf-custom");
  CHECK(custom.status == EdgeStatus::kUnknown);
  CHECK(custom.reason == UnknownReason::kDefaultProvenanceCoreTerm);

  CHECK(report.package_status() == EdgeStatus::kIncompatible);
  auto counts = report.dependency_counts();
  CHECK(counts.incompatible == 2);
  CHECK(counts.unknown == 3);
  CHECK(counts.compatible == 2);
  CHECK(exit_code(report) == 1);
  CHECK(report.model_calls == rt.gateway->calls());
}

TEST_CASE("an unresolved root makes every edge unknown") {
  auto& rt = testing::mock_runtime();
  PackageIndex index;
  index.add(with_requires(pkg("root", "1.0"), {"dep"}));
  index.add(with_license(pkg("dep", "1.0"), "MIT"));
  auto report = scan("root", "1.0", index, kb(), *rt.gateway, config());
  REQUIRE(report.dependencies.size() == 1);
  CHECK(report.dependencies[0].status == EdgeStatus::kUnknown);
  CHECK(report.dependencies[0].detail.find("root license unresolved") == 0);
  CHECK(exit_code(report) == 2);
}

TEST_CASE("third-party components are judged against the root") {
  auto& rt = testing::mock_runtime();
  PackageIndex index;
  index.add(with_requires(with_license(pkg("root", "1.0"), "MIT"), {"vendored"}));
  index.add(with_file(pkg("vendored", "1.0"), fixture_text("bundle-mit-bsd3.txt")));
  auto report = scan("root", "1.0", index, kb(), *rt.gateway, config());
  REQUIRE(report.third_party.size() == 1);
  CHECK(report.third_party[0].component == std::optional<std::size_t>(1));
  CHECK(report.third_party[0].upstream_license == "BSD-3-Clause");
  CHECK(report.third_party[0].status == EdgeStatus::kCompatible);
  CHECK(report.third_party_status() == EdgeStatus::kCompatible);
  CHECK(exit_code(report) == 0);
}

TEST_CASE("a root without dependencies") {
  auto& rt = testing::mock_runtime();
  PackageIndex index;
  index.add(with_license(pkg("solo", "0.1"), "MIT"));
  auto report = scan("solo", "0.1", index, kb(), *rt.gateway, config());
  CHECK(report.dependencies.empty());
  CHECK(report.package_status() == EdgeStatus::kCompatible);
  CHECK(exit_code(report) == 0);
  auto text = report_render(report, ReportFormat::kHuman);
  CHECK(text.find("Dependencies: 0 checked, 0 incompatible, 0 unknown, 0 compatible") != std::string::npos);
  CHECK(text.find("Package: Compatible") != std::string::npos);
  CHECK_THROWS_AS(scan("nobody", "1.0", index, kb(), *rt.gateway, config()), NotFoundError);
}

TEST_CASE("backend failures surface as unknown edges") {
  auto gw = std::make_shared<ModelGateway>(
      std::make_shared<ScriptedBackend>([](const ChatRequest&) -> std::string {
        throw TransportError("service unavailable", 5, 503);
      }),
      std::make_shared<HashedTrigramEmbedder>());
  PackageIndex index;
  index.add(with_requires(with_license(pkg("root", "1.0"), "MIT"), {"filed", "named"}));
  index.add(with_file(pkg("filed", "1.0"), kb().get("MIT").full_text));
  index.add(with_license(pkg("named", "1.0"), "Apache-2.0"));
  auto report = scan("root", "1.0", index, kb(), *gw, config());
  CHECK(edge(report, "filed").status == EdgeStatus::kUnknown);
  CHECK(edge(report, "filed").reason == UnknownReason::kBackendFailure);
  CHECK(edge(report, "filed").detail.find("service unavailable") != std::string::npos);
  // Identifier evidence needs no model and still resolves.
  CHECK(edge(report, "named").status == EdgeStatus::kCompatible);
}

TEST_CASE("caches make repeated resolutions free and worker count irrelevant") {
  auto index = app_index();
  auto rt1 = testing::fresh_mock_runtime();
  ScanConfig one = config();
  one.workers = 1;
  Scanner serial(kb(), *rt1.gateway, one);
  auto a = serial.scan("app", "1.0", index);

  auto rt8 = testing::fresh_mock_runtime();
  ScanConfig many = config();
  many.workers = 8;
  Scanner parallel(kb(), *rt8.gateway, many);
  auto b = parallel.scan("app", "1.0", index);
  CHECK(a == b);
  CHECK(rt1.gateway->calls() == rt8.gateway->calls());

  // Same texts again: every parse and segmentation is a cache hit.
  auto c = parallel.scan("app", "1.0", index);
  CHECK(c.model_calls == 0);
  c.model_calls = b.model_calls;
  CHECK(c == b);
  CHECK(rt8.gateway->calls() == rt1.gateway->calls());
}

TEST_CASE("judge_edge picks the best alternative and the worst conjunct") {
  auto& rt = testing::mock_runtime();
  Scanner s(kb(), *rt.gateway, config());
  auto root = s.resolve_license(with_license(pkg("root", "1.0"), "MIT"));
  auto both = s.resolve_license(with_license(pkg("x", "1.0"), "Apache-2.0 AND GPL-3.0-only"));
  auto e = judge_edge(both, root, config().exception_rules);
  CHECK(e.status == EdgeStatus::kIncompatible);
  auto either = s.resolve_license(with_license(pkg("y", "1.0"), "GPL-3.0-only OR Apache-2.0"));
  auto f = judge_edge(either, root, config().exception_rules);
  CHECK(f.status == EdgeStatus::kCompatible);
  CHECK(f.chosen == "Apache-2.0");
  CHECK(f.downstream_license == "MIT");
}

TEST_CASE("property: rollup is the most severe edge and exit codes follow it") {
  std::mt19937 rng(55);
  const std::array<EdgeStatus, 3> all = {EdgeStatus::kCompatible, EdgeStatus::kUnknown, EdgeStatus::kIncompatible};
  for (int i = 0; i < 500; ++i) {
    ScanReport r;
    EdgeStatus worst_dep = EdgeStatus::kCompatible;
    EdgeStatus worst_tp = EdgeStatus::kCompatible;
    const int deps = static_cast<int>(rng() % 6);
    for (int k = 0; k < deps; ++k) {
      EdgeReport e;
      e.status = all[rng() % 3];
      worst_dep = std::max(worst_dep, e.status);
      r.dependencies.push_back(e);
    }
    const int tps = static_cast<int>(rng() % 3);
    for (int k = 0; k < tps; ++k) {
      EdgeReport e;
      e.status = all[rng() % 3];
      worst_tp = std::max(worst_tp, e.status);
      r.third_party.push_back(e);
    }
    CHECK(r.package_status() == worst_dep);
    CHECK(r.third_party_status() == worst_tp);
    const auto c = r.dependency_counts();
    CHECK(c.total() == r.dependencies.size());
    const EdgeStatus overall = std::max(worst_dep, worst_tp);
    const int expected = overall == EdgeStatus::kIncompatible ? 1 : overall == EdgeStatus::kUnknown ? 2 : 0;
    CHECK(exit_code(r) == expected);
  }
}

TEST_CASE("property: adding an incompatible dependency never improves the verdict") {
  auto& rt = testing::mock_runtime();
  std::mt19937 rng(4);
  const std::vector<std::string> licenses = {"MIT", "Apache-2.0", "BSD", "GPL-2.0-only", "MPL-2.0", "ISC",
                                             "GPL-3.0-only", "Zlib"};
  for (int round = 0; round < 8; ++round) {
    PackageIndex index;
    std::vector<std::string> reqs;
    const int n = 2 + static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) {
      reqs.push_back("dep" + std::to_string(k));
      index.add(with_license(pkg("dep" + std::to_string(k), "1.0"), licenses[rng() % licenses.size()]));
    }
    index.add(with_requires(with_license(pkg("root", "1.0"), "MIT"), reqs));
    auto before = scan("root", "1.0", index, kb(), *rt.gateway, config());

    PackageIndex bigger = index;
    bigger.add(with_license(pkg("bad", "1.0"), "GPL-3.0-only"));
    auto& root = const_cast<PackageRelease&>(*bigger.find("root", "1.0"));
    root.requires_dist.push_back(parse_requirement("bad"));
    auto after = scan("root", "1.0", bigger, kb(), *rt.gateway, config());
    CHECK(after.package_status() == EdgeStatus::kIncompatible);
    CHECK(after.package_status() >= before.package_status());
    CHECK(after.dependency_counts().incompatible == before.dependency_counts().incompatible + 1);
  }
}

TEST_CASE("report JSON round trip and rendering") {
  auto& rt = testing::mock_runtime();
  auto index = app_index();
  auto report = scan("app", "1.0", index, kb(), *rt.gateway, config());
  auto j = to_json(report);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("package_status") == "Incompatible");
  CHECK(j.at("counts").at("dependencies").at("unknown") == 3);
  CHECK(scan_report_from_json(nlohmann::json::parse(j.dump())) == report);
  CHECK(report_render(report, ReportFormat::kJson) == j.dump(2) + "\n");

  auto human = report_render(report, ReportFormat::kHuman);
  CHECK(human.find("Package: Incompatible") != std::string::npos);
  CHECK(human.find("Dependencies: 7 checked, 2 incompatible, 3 unknown, 2 compatible") != std::string::npos);
  CHECK(human.find("Incompatible dependencies:") != std::string::npos);
  CHECK(human.find("Compatible dependencies:") == std::string::npos);
  auto explained = report_render(report, ReportFormat::kHuman, true);
  CHECK(explained.find("Compatible dependencies:") != std::string::npos);
  CHECK(explained.find("Resolution log:") != std::string::npos);
  CHECK(explained.find("proprietary-upstream") != std::string::npos);

  auto broken = j;
  broken.erase("dependencies");
  CHECK_THROWS_AS(scan_report_from_json(broken), SchemaError);
  broken = j;
  broken["schema_version"] = 3;
  CHECK_THROWS_AS(scan_report_from_json(broken), SchemaError);
}

TEST_CASE("resolution JSON") {
  auto& rt = testing::mock_runtime();
  auto r = resolve_license(with_license(pkg("a", "1.0"), "MIT OR BSD"), kb(), *rt.gateway, config());
  auto j = to_json(r);
  CHECK(j.at("license") == r.display());
  CHECK(j.at("components").size() == r.components.size());
}

}  // TEST_SUITE
