#include <fstream>
#include <sstream>

#include "licvar/errors.hpp"
#include "licvar/fingerprint.hpp"
#include "licvar/model_gateway.hpp"

namespace licvar {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::regex compile(const std::string& pattern, const std::filesystem::path& file) {
  try {
    return std::regex(pattern, std::regex::ECMAScript | std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw SchemaError(file.string() + ": bad pattern '" + pattern + "': " + e.what());
  }
}

// Clause texts are newline-joined sentences; rules are matched per sentence
// to keep regex backtracking bounded.
std::vector<std::string> clause_pieces(const std::string& clause) {
  std::vector<std::string> out;
  std::istringstream in(clause);
  for (std::string line; std::getline(in, line);) {
    std::string norm = normalized_string(line);
    if (!norm.empty()) out.push_back(std::move(norm));
  }
  return out;
}

std::string fence(const std::string& body) { return "```\n" + body + "```\n"; }

std::string value_line(const nlohmann::json& v) {
  if (v.is_null()) return "none";
  if (v.is_number_integer()) return std::to_string(v.get<int>());
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i].get<std::string>();
  return out + "]";
}

bool is_blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

std::size_t words(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace

MockReasoningBackend::MockReasoningBackend(const std::filesystem::path& rules_dir) {
  const auto classify_file = rules_dir / "classify_rules.json";
  const nlohmann::json classify = read_json(classify_file);
  for (const auto& rule : classify.at("rules")) {
    ClassifyRule r{compile(rule.at("pattern").get<std::string>(), classify_file), {}};
    for (const auto& name : rule.at("labels")) {
      auto kind = term_kind_from_string(name.get<std::string>());
      if (!kind) throw SchemaError(classify_file.string() + ": unknown term " + name.dump());
      r.labels.push_back(*kind);
    }
    classify_rules_.push_back(std::move(r));
  }

  const auto value_file = rules_dir / "value_rules.json";
  const nlohmann::json value = read_json(value_file);
  for (const auto& [name, rules] : value.at("rules").items()) {
    auto kind = term_kind_from_string(name);
    if (!kind) throw SchemaError(value_file.string() + ": unknown term " + name);
    for (const auto& rule : rules) {
      const nlohmann::json& v = rule.at("value");
      if (!in_domain(*kind, term_value_from_json(*kind, v))) {
        throw SchemaError(value_file.string() + ": out-of-domain value for " + name);
      }
      value_rules_[index_of(*kind)].push_back({compile(rule.at("pattern").get<std::string>(), value_file), v});
    }
  }
}

std::string MockReasoningBackend::do_complete(const ChatRequest& request) {
  switch (request.task) {
    case ModelTask::kClassify: return classify(request.payload);
    case ModelTask::kValue: return value(request.payload);
    case ModelTask::kSegment: return segment(request.payload);
  }
  throw ProtocolError("unsupported task");
}

std::string MockReasoningBackend::classify(const nlohmann::json& payload) const {
  const std::string norm = normalized_string(payload.at("sentence").get<std::string>());
  std::set<TermKind> labels;
  std::optional<std::vector<TermKind>> known;
  if (known_labels_) known = known_labels_(norm);
  if (known) {
    labels.insert(known->begin(), known->end());
  } else {
    for (const ClassifyRule& rule : classify_rules_) {
      if (std::regex_search(norm, rule.pattern)) labels.insert(rule.labels.begin(), rule.labels.end());
    }
  }
  std::string names;
  for (TermKind k : kAllTermKinds) {
    if (labels.count(k)) names += (names.empty() ? "" : ", ") + std::string(to_string(k));
  }
  return fence("LABELS: " + (names.empty() ? std::string("none") : names) + "\n");
}

std::string MockReasoningBackend::value(const nlohmann::json& payload) const {
  const auto kind = term_kind_from_string(payload.at("kind").get<std::string>());
  if (!kind) return fence("VALUE: ?\n");
  const auto pieces = clause_pieces(payload.at("clause").get<std::string>());
  const auto& rules = value_rules_[index_of(*kind)];

  if (is_scalar(*kind)) {
    for (const ValueRule& rule : rules) {
      for (const std::string& piece : pieces) {
        if (std::regex_search(piece, rule.pattern)) {
          return fence("VALUE: " + value_line(rule.value) + "\nRATIONALE: matched rule '" +
                       std::string(to_string(*kind)) + "'\n");
        }
      }
    }
  } else {
    std::vector<std::string> items;
    for (const ValueRule& rule : rules) {
      const bool hit = std::any_of(pieces.begin(), pieces.end(),
                                   [&](const std::string& p) { return std::regex_search(p, rule.pattern); });
      if (hit) {
        for (const auto& item : rule.value) items.push_back(item.get<std::string>());
      }
    }
    if (!items.empty()) {
      return fence("VALUE: " + value_line(nlohmann::json(items)) + "\nRATIONALE: matched rules\n");
    }
  }

  const auto& examples = payload.at("examples");
  if (!examples.empty()) {
    return fence("VALUE: " + value_line(examples.front().at("value")) + "\nRATIONALE: closest example " +
                 examples.front().at("license").get<std::string>() + "\n");
  }
  return fence("VALUE: " + value_line(term_value_to_json(not_mentioned_value(*kind))) +
               "\nRATIONALE: nothing specific\n");
}

// Line heuristics: short reference statements, third-party section headers,
// and license title lines after a dual-licensing statement.
std::string MockReasoningBackend::segment(const nlohmann::json& payload) const {
  std::vector<std::string> lines;
  for (const auto& l : payload.at("lines")) lines.push_back(l.get<std::string>());
  const std::size_t n = lines.size();

  std::string all;
  for (const auto& l : lines) all += l + "\n";
  const std::string norm = normalized_string(all);

  static const std::regex reference(
      R"(\b(licensed under|released under|distributed under|license is|spdx license identifier|see (the )?licen[cs]e)\b)");
  if (norm.size() < 300 && std::regex_search(norm, reference)) {
    return fence("COMPONENT: reference 1-" + std::to_string(n) + "\n");
  }

  static const std::regex third_party(R"(^(third party|bundled|vendored)\b)");
  static const std::regex title(
      R"(^(the )?(mit|isc|bsd|apache|mozilla|gnu|unlicense|zlib|boost|python software foundation|psf)\b.*\blicen[cs]e\b.*$|^the unlicense$)");
  static const std::regex dual(R"(\b(dual licensed|dual licensing|licensed under either|at your (option|choice)|either of the following licen[cs]es)\b)");

  const bool is_dual = std::regex_search(norm.substr(0, std::min<std::size_t>(norm.size(), 600)), dual);

  // (kind, first line), 1-based.
  std::vector<std::pair<std::string, std::size_t>> starts;
  bool in_third_party = false;
  bool intro = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_blank(lines[i])) continue;
    const bool para_start = i == 0 || is_blank(lines[i - 1]);
    const std::string l = normalized_string(lines[i]);
    if (para_start && words(lines[i]) <= 8 && std::regex_search(l, third_party)) {
      starts.emplace_back("notice", i + 1);
      in_third_party = true;
      intro = true;
      continue;
    }
    if (intro && para_start) {
      // Introductory paragraphs ending in a colon stay with the header.
      std::size_t end = i;
      while (end + 1 < n && !is_blank(lines[end + 1])) ++end;
      const auto last = lines[end].find_last_not_of(" \t\r");
      if (last != std::string::npos && lines[end][last] == ':') continue;
      starts.emplace_back("third-party-license", i + 1);
      intro = false;
      continue;
    }
    if (starts.empty()) {
      const bool opens_with_title = std::regex_search(l, title) && words(lines[i]) <= 10;
      starts.emplace_back(is_dual && !opens_with_title ? "notice" : "primary-license", i + 1);
      continue;
    }
    if (is_dual && !in_third_party && para_start && words(lines[i]) <= 10 && std::regex_search(l, title)) {
      starts.emplace_back("primary-license", i + 1);
    }
  }
  if (starts.empty()) return fence("COMPONENT: primary-license 1-" + std::to_string(n) + "\n");
  starts.front().second = 1;

  std::string body;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t last = k + 1 < starts.size() ? starts[k + 1].second - 1 : n;
    body += "COMPONENT: " + starts[k].first + " " + std::to_string(starts[k].second) + "-" +
            std::to_string(last) + "\n";
  }
  return fence(body);
}

}  // namespace licvar
