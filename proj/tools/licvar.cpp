#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "licvar/compat.hpp"
#include "licvar/depgraph.hpp"
#include "licvar/errors.hpp"
#include "licvar/fingerprint.hpp"
#include "licvar/knowledge_base.hpp"
#include "licvar/parser.hpp"
#include "licvar/pipeline.hpp"
#include "licvar/runtime.hpp"
#include "licvar/textproc.hpp"

namespace fs = std::filesystem;
using namespace licvar;

namespace {

constexpr int kOperationalError = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Globals {
  std::string backend;
  std::string config;
  std::string data_dir;
  std::string kb;
  double threshold = -1;
  std::size_t workers = 0;

  RuntimeOptions options() const {
    RuntimeOptions o = config.empty() ? RuntimeOptions{} : RuntimeOptions::from_config(config);
    if (!backend.empty()) o.backend = backend;
    if (!data_dir.empty()) o.data_dir = data_dir;
    if (!kb.empty()) o.kb_dir = kb;
    if (threshold >= 0) o.parser.similarity_threshold = threshold;
    if (workers > 0) o.workers = workers;
    return o;
  }
};

ScanConfig scan_config(const RuntimeOptions& o) {
  ScanConfig cfg = ScanConfig::with_data(o.resolved_data_dir());
  cfg.parser = o.parser;
  cfg.workers = o.workers;
  return cfg;
}

// A license given on the command line: a file holding license text, or an
// SPDX id (optionally "<id> WITH <exception>").
LicenseResolution cli_license(const std::string& arg, Scanner& scanner) {
  PackageRelease rel;
  rel.name = rel.display_name = arg;
  rel.version = *Version::parse("0");
  if (fs::is_regular_file(arg)) {
    rel.license_file = read_file(arg);
  } else {
    rel.license = arg;
  }
  return scanner.resolve_license(rel);
}

LicenseTerms single_terms(const LicenseResolution& r, const std::string& arg) {
  const ResolvedComponent* pick = nullptr;
  for (const auto& c : r.components) {
    if (c.kind == ComponentKind::kThirdPartyLicense || c.kind == ComponentKind::kNotice) continue;
    if (pick) throw ValidationError(arg + ": names more than one license; give a single license");
    pick = &c;
  }
  if (!pick || !pick->parse) {
    throw UnknownLicenseError(arg + ": license not recognized" + (pick ? " (" + pick->detail + ")" : std::string{}));
  }
  return {pick->license_id(), pick->parse->term_vector, pick->exception_tags};
}

void print_node(const DependencyTree& tree, std::size_t i) {
  const TreeNode& n = tree.nodes[i];
  std::cout << std::string(n.depth * 2, ' ') << n.name << " " << n.version;
  if (!n.specifier.empty()) std::cout << "  (" << n.specifier << ")";
  std::cout << "\n";
  for (std::size_t j = i + 1; j < tree.nodes.size(); ++j) {
    if (tree.nodes[j].parent == n.name) print_node(tree, j);
  }
}

void print_tree(const DependencyTree& tree) {
  print_node(tree, 0);
  if (!tree.log.empty()) {
    std::cout << "\nresolution log:\n";
    for (const auto& l : tree.log) {
      std::cout << "  " << l.parent << ": " << l.requirement << " -> " << l.chosen.value_or("-") << " (" << l.note
                << ")\n";
    }
  }
}

nlohmann::json tree_json(const DependencyTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"name", n.name},
                     {"version", n.version},
                     {"depth", n.depth},
                     {"parent", n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr)},
                     {"specifier", n.specifier}});
  }
  nlohmann::json log = nlohmann::json::array();
  for (const auto& l : tree.log) {
    log.push_back({{"parent", l.parent},
                   {"requirement", l.requirement},
                   {"chosen", l.chosen ? nlohmann::json(*l.chosen) : nlohmann::json(nullptr)},
                   {"note", l.note}});
  }
  return {{"nodes", nodes}, {"log", log}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"License variant parsing, compatibility checking and dependency scanning"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--backend", g.backend, "Reasoning backend: mock or remote");
  app.add_option("--config", g.config, "JSON config file (backend, credentials, thresholds)");
  app.add_option("--data-dir", g.data_dir, "Data directory (rule tables, mock rules)");
  app.add_option("--kb", g.kb, "Knowledge base directory");

  int exit_status = 0;

  auto* compare = app.add_subcommand("compare", "Winnowing similarity of two license files");
  std::string file_a, file_b;
  compare->add_option("fileA", file_a)->required();
  compare->add_option("fileB", file_b)->required();
  compare->callback([&] {
    std::printf("%.4f\n", text_similarity(read_file(file_a), read_file(file_b)));
  });

  auto* diff = app.add_subcommand("diff", "Sentence-level diff of a candidate against a standard text");
  std::string candidate, standard;
  diff->add_option("candidate", candidate)->required();
  diff->add_option("standard", standard)->required();
  diff->callback([&] {
    const auto c = segment(read_file(candidate));
    const auto s = segment(read_file(standard));
    const SentenceDiff d = diff_sentences(c, s);
    std::cout << "matched: " << d.matched.size() << "\n"
              << "candidate only: " << d.candidate_only.size() << "\n"
              << "standard only: " << d.standard_only.size() << "\n";
    for (std::size_t i : d.candidate_only) std::cout << "+ " << c[i].text << "\n";
    for (std::size_t i : d.standard_only) std::cout << "- " << s[i].text << "\n";
  });

  auto* seg = app.add_subcommand("segment", "Split a license file into components");
  std::string seg_file;
  bool seg_json = false;
  seg->add_option("file", seg_file)->required();
  seg->add_flag("--json", seg_json);
  seg->callback([&] {
    Runtime rt = make_runtime(g.options(), false);
    const auto comps = rt.gateway->segment_license_file(read_file(seg_file));
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : comps) j.push_back({{"kind", to_string(c.kind)}, {"text", c.text}});
    if (seg_json) {
      std::cout << j.dump(2) << "\n";
      return;
    }
    for (const auto& c : comps) {
      std::size_t lines = std::count(c.text.begin(), c.text.end(), '\n');
      std::cout << to_string(c.kind) << " (" << lines << " lines): ";
      const auto first = c.text.find_first_not_of(" \t\r\n");
      std::string head = first == std::string::npos ? "" : c.text.substr(first, c.text.find('\n', first) - first);
      std::cout << head.substr(0, 72) << "\n";
    }
  });

  auto* parse_cmd = app.add_subcommand("parse", "Parse a license text into a term vector");
  std::string parse_file;
  bool parse_json = false, baseline = false;
  parse_cmd->add_option("file", parse_file)->required();
  parse_cmd->add_option("--threshold", g.threshold, "Similarity threshold for matching a standard license");
  parse_cmd->add_flag("--json", parse_json);
  parse_cmd->add_flag("--baseline", baseline, "Send every sentence to the model");
  parse_cmd->callback([&] {
    const RuntimeOptions o = g.options();
    Runtime rt = make_runtime(o);
    const std::string text = read_file(parse_file);
    const ParseResult r = baseline ? parse_baseline(text, *rt.kb, *rt.gateway, o.parser)
                                   : parse(text, *rt.kb, *rt.gateway, o.parser);
    if (parse_json) {
      std::cout << to_json(r).dump(2) << "\n";
      return;
    }
    std::cout << "license: " << r.license_ref << "\n";
    std::cout << "best match: " << (r.matched_standard ? r.matched_standard->license_id : "none") << " (similarity "
              << r.best_similarity << ")\n";
    std::cout << "sentences: " << r.sentence_count << ", reused " << r.reused_sentence_count << ", sent to model "
              << r.model_sentence_count << "; model calls " << r.model_calls << "\n";
    for (TermKind k : kAllTermKinds) {
      std::cout << "  " << to_string(k) << " = " << r.term_vector.get(k).to_display() << "  ["
                << to_string(r.term_vector.provenance(k)) << "]\n";
    }
    for (const auto& c : r.conflicts) {
      std::cout << "conflict " << to_string(c.kind) << ": reused " << c.reused.to_display() << ", inferred "
                << c.inferred.to_display() << ", kept " << c.resolved.to_display() << "\n";
    }
    for (const auto& n : r.notes) std::cout << "note: " << n << "\n";
  });

  auto* compat = app.add_subcommand("compat", "Compatibility of an upstream license with a downstream license");
  std::string upstream, downstream;
  bool explain = false, compat_json = false;
  compat->add_option("upstream", upstream, "SPDX id or license file")->required();
  compat->add_option("downstream", downstream, "SPDX id or license file")->required();
  compat->add_flag("--explain", explain, "Print the rule trace");
  compat->add_flag("--json", compat_json);
  compat->callback([&] {
    const RuntimeOptions o = g.options();
    Runtime rt = make_runtime(o);
    Scanner scanner(*rt.kb, *rt.gateway, scan_config(o));
    const LicenseTerms up = single_terms(cli_license(upstream, scanner), upstream);
    const LicenseTerms down = single_terms(cli_license(downstream, scanner), downstream);
    const CompatibilityVerdict v = check(up, down, scanner.config().exception_rules);
    if (compat_json) {
      nlohmann::json j = to_json(v);
      j["upstream"] = up.id;
      j["downstream"] = down.id;
      std::cout << j.dump(2) << "\n";
      return;
    }
    std::cout << up.id << " -> " << down.id << ": " << v.to_display() << "\n";
    if (explain) {
      for (const auto& s : v.trace) std::cout << "  " << s.rule << ": " << s.inputs << " => " << s.outcome << "\n";
    }
  });

  auto* deps = app.add_subcommand("deps", "Resolve the dependency tree of a package");
  std::string name, version, index_dir;
  bool deps_json = false;
  deps->add_option("name", name)->required();
  deps->add_option("version", version)->required();
  deps->add_option("--index", index_dir, "Package index directory")->required();
  deps->add_flag("--json", deps_json);
  deps->callback([&] {
    const DependencyTree tree = resolve(name, version, PackageIndex::load(index_dir));
    if (deps_json) {
      std::cout << tree_json(tree).dump(2) << "\n";
    } else {
      print_tree(tree);
    }
  });

  auto* scan_cmd = app.add_subcommand("scan", "Check every dependency's license against the root's");
  bool scan_json = false, scan_explain = false;
  scan_cmd->add_option("name", name)->required();
  scan_cmd->add_option("version", version)->required();
  scan_cmd->add_option("--index", index_dir, "Package index directory")->required();
  scan_cmd->add_option("--workers", g.workers, "Concurrent license resolutions");
  scan_cmd->add_flag("--json", scan_json);
  scan_cmd->add_flag("--explain", scan_explain, "List compatible edges, traces and the resolution log");
  scan_cmd->callback([&] {
    const RuntimeOptions o = g.options();
    Runtime rt = make_runtime(o);
    const ScanReport report =
        Scanner(*rt.kb, *rt.gateway, scan_config(o)).scan(name, version, PackageIndex::load(index_dir));
    std::cout << report_render(report, scan_json ? ReportFormat::kJson : ReportFormat::kHuman, scan_explain);
    exit_status = exit_code(report);
  });

  auto* kb = app.add_subcommand("kb", "Knowledge base maintenance");
  kb->require_subcommand(1);
  std::string kb_dir, out_dir;
  auto* validate = kb->add_subcommand("validate", "Load a knowledge base and check its invariants");
  validate->add_option("dir", kb_dir)->required();
  validate->callback([&] {
    RuntimeOptions o = g.options();
    o.kb_dir = kb_dir;
    Runtime rt = make_runtime(o);
    const auto problems = check_kb_invariants(*rt.kb);
    for (const auto& p : problems) std::cout << "problem: " << p << "\n";
    std::cout << rt.kb->size() << " licenses, " << problems.size() << " problems\n";
    exit_status = problems.empty() ? 0 : 1;
  });
  auto* build = kb->add_subcommand("build", "Recompute embeddings with the selected backend");
  build->add_option("dir", kb_dir)->required();
  build->add_option("--out", out_dir, "Output directory (default: in place)");
  build->callback([&] {
    RuntimeOptions o = g.options();
    o.kb_dir = kb_dir;
    Runtime rt = make_runtime(o, false);
    // Loading needs vectors from the manifest's backend; the builtin one
    // always works, so start from it and re-embed.
    HashedTrigramEmbedder builtin;
    const KnowledgeBase base = KnowledgeBase::load(kb_dir, builtin);
    const KnowledgeBase rebuilt = base.rebuilt(*rt.embedder);
    rebuilt.save(out_dir.empty() ? fs::path(kb_dir) : fs::path(out_dir));
    std::cout << "built " << rebuilt.size() << " licenses with " << rt.embedder->name() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kOperationalError;
  } catch (const std::exception& e) {
    std::cerr << "licvar: " << e.what() << "\n";
    return kOperationalError;
  }
  return exit_status;
}
