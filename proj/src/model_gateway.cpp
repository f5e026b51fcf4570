#include "licvar/model_gateway.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "licvar/errors.hpp"
#include "licvar/fingerprint.hpp"
#include "licvar/spdx.hpp"

namespace licvar {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Body of the first ``` fence, or the whole reply when there is none.
std::string_view fenced_body(std::string_view reply) {
  const auto open = reply.find("```");
  if (open == std::string_view::npos) return reply;
  auto body_start = reply.find('\n', open);
  if (body_start == std::string_view::npos) throw ProtocolError("unterminated code fence");
  ++body_start;
  const auto close = reply.find("```", body_start);
  if (close == std::string_view::npos) throw ProtocolError("unterminated code fence");
  return reply.substr(body_start, close - body_start);
}

// KEY: value lines of the reply body, in order.
std::vector<std::pair<std::string, std::string>> reply_fields(std::string_view reply) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string_view body = fenced_body(reply);
  while (!body.empty()) {
    auto eol = body.find('\n');
    std::string_view line = trim(body.substr(0, eol));
    body = eol == std::string_view::npos ? std::string_view{} : body.substr(eol + 1);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ProtocolError("line without 'KEY:' prefix: " + std::string(line));
    std::string key = lower(trim(line.substr(0, colon)));
    out.emplace_back(std::move(key), std::string(trim(line.substr(colon + 1))));
  }
  return out;
}

std::optional<std::string> field(const std::vector<std::pair<std::string, std::string>>& fields,
                                 std::string_view key) {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<std::string> split_list(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ProtocolError("unbalanced list brackets");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string_view::npos) comma = s.size();
    std::string_view item = trim(s.substr(pos, comma - pos));
    while (!item.empty() && (item.front() == '"' || item.front() == '\'')) item.remove_prefix(1);
    while (!item.empty() && (item.back() == '"' || item.back() == '\'')) item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    pos = comma + 1;
  }
  return out;
}

bool is_none_word(std::string_view s) {
  const std::string l = lower(trim(s));
  return l.empty() || l == "none" || l == "null" || l == "other" || l == "[]" || l == "n/a";
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    const std::size_t end = eol == std::string_view::npos ? text.size() : eol + 1;
    lines.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return lines;
}

}  // namespace

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw BackendError("embedding dimensions differ");
  double dot = 0;
  double na = 0;
  double nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Embedding HashedTrigramEmbedder::embed(std::string_view text) {
  const std::string norm = normalized_string(text);
  std::vector<double> counts(kDimension, 0.0);
  for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
    counts[fnv1a64(std::string_view(norm).substr(i, 3)) % kDimension] += 1.0;
  }
  double norm2 = 0;
  for (double c : counts) norm2 += c * c;
  Embedding out(kDimension, 0.0f);
  if (norm2 == 0) return out;
  const double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < kDimension; ++i) out[i] = static_cast<float>(counts[i] * inv);
  return out;
}

std::string_view to_string(ModelTask task) {
  switch (task) {
    case ModelTask::kClassify: return "classify";
    case ModelTask::kValue: return "value";
    case ModelTask::kSegment: return "segment";
  }
  return "?";
}

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::kPrimaryLicense: return "primary-license";
    case ComponentKind::kThirdPartyLicense: return "third-party-license";
    case ComponentKind::kNotice: return "notice";
    case ComponentKind::kReference: return "reference";
  }
  return "?";
}

std::optional<ComponentKind> component_kind_from_string(std::string_view s) {
  for (auto k : {ComponentKind::kPrimaryLicense, ComponentKind::kThirdPartyLicense, ComponentKind::kNotice,
                 ComponentKind::kReference}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view term_definition(TermKind kind) {
  static const std::array<std::string, kTermKindCount> defs = [] {
    std::array<std::string, kTermKindCount> out;
    std::string_view all = prompt_template("definitions");
    for (std::string_view line : split_lines(all)) {
      line = trim(line);
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) continue;
      if (auto k = term_kind_from_string(line.substr(0, colon))) {
        out[index_of(*k)] = std::string(trim(line.substr(colon + 1)));
      }
    }
    return out;
  }();
  return defs[index_of(kind)];
}

std::string domain_description(TermKind kind) {
  switch (shape_of(kind)) {
    case ValueShape::kScalar: {
      const auto d = scalar_domain(kind);
      std::string out = "one integer from";
      for (int v = d.min; v <= d.max; ++v) out += (v == d.min ? " " : ", ") + std::to_string(v);
      return out;
    }
    case ValueShape::kLicenseList: return "none, or a bracketed list of SPDX license identifiers";
    case ValueShape::kTagList: return "none, or a bracketed list of short lowercase tags";
  }
  return {};
}

std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string_view, std::string>>& vars) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string_view name = tmpl.substr(open + 2, close - open - 2);
    auto it = std::find_if(vars.begin(), vars.end(), [&](const auto& v) { return v.first == name; });
    if (it != vars.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

// --- Reply parsing -----------------------------------------------------------

std::set<TermKind> parse_labels_reply(std::string_view reply) {
  const auto fields = reply_fields(reply);
  const auto labels = field(fields, "labels");
  if (!labels) throw ProtocolError("missing LABELS line");
  std::set<TermKind> out;
  if (is_none_word(*labels)) return out;
  for (const std::string& item : split_list(*labels)) {
    if (is_none_word(item)) continue;
    auto kind = term_kind_from_string(lower(item));
    if (!kind) throw ProtocolError("unknown term name: " + item);
    out.insert(*kind);
  }
  return out;
}

ValuationResult parse_value_reply(TermKind kind, std::string_view reply) {
  const auto fields = reply_fields(reply);
  const auto raw = field(fields, "value");
  if (!raw) throw ProtocolError("missing VALUE line");
  ValuationResult result;
  result.rationale = field(fields, "rationale").value_or("");
  switch (shape_of(kind)) {
    case ValueShape::kScalar: {
      const std::string_view s = trim(*raw);
      int v = 0;
      const char* first = s.data();
      if (!s.empty() && s.front() == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ProtocolError("value for " + std::string(to_string(kind)) + " is not an integer: " + *raw);
      }
      result.value = TermValue::scalar(v);
      break;
    }
    case ValueShape::kLicenseList: {
      if (is_none_word(*raw)) break;
      std::vector<std::string> ids;
      for (const std::string& item : split_list(*raw)) {
        auto id = spdx::canonical_id(item);
        if (!id) throw ProtocolError("not an SPDX license identifier: " + item);
        ids.push_back(spdx::preferred_id(*id));
      }
      result.value = TermValue::licenses(std::move(ids));
      break;
    }
    case ValueShape::kTagList: {
      if (is_none_word(*raw)) break;
      std::vector<std::string> tags;
      for (const std::string& item : split_list(*raw)) tags.push_back(item);
      result.value = TermValue::tags(std::move(tags));
      break;
    }
  }
  if (!in_domain(kind, result.value)) {
    throw ProtocolError("value " + result.value.to_display() + " is outside the domain of " +
                        std::string(to_string(kind)));
  }
  return result;
}

std::vector<std::pair<ComponentKind, std::pair<std::size_t, std::size_t>>> parse_segment_reply(
    std::string_view reply, std::size_t line_count) {
  std::vector<std::pair<ComponentKind, std::pair<std::size_t, std::size_t>>> out;
  std::size_t next = 1;
  for (const auto& [key, value] : reply_fields(reply)) {
    if (key != "component") continue;
    std::istringstream in(value);
    std::string kind_name;
    std::string range;
    in >> kind_name >> range;
    auto kind = component_kind_from_string(lower(kind_name));
    if (!kind) throw ProtocolError("unknown component kind: " + kind_name);
    const auto dash = range.find('-');
    std::size_t first = 0;
    std::size_t last = 0;
    try {
      first = std::stoul(range.substr(0, dash));
      last = dash == std::string::npos ? first : std::stoul(range.substr(dash + 1));
    } catch (const std::exception&) {
      throw ProtocolError("malformed line range: " + range);
    }
    if (first != next || last < first || last > line_count) {
      throw ProtocolError("components must cover lines 1-" + std::to_string(line_count) +
                          " in order without gaps; got " + range);
    }
    out.push_back({*kind, {first, last}});
    next = last + 1;
  }
  if (next != line_count + 1) {
    throw ProtocolError("components must cover lines 1-" + std::to_string(line_count));
  }
  return out;
}

// --- Gateway -----------------------------------------------------------------

ModelGateway::ModelGateway(std::shared_ptr<ReasoningBackend> reasoning,
                           std::shared_ptr<EmbeddingBackend> embedding)
    : reasoning_(std::move(reasoning)), embedding_(std::move(embedding)) {
  if (!reasoning_ || !embedding_) throw BackendError("gateway needs both a reasoning and an embedding backend");
}

template <typename Parse>
auto ModelGateway::ask(ModelTask task, const std::string& prompt, const nlohmann::json& payload,
                       Parse parse, std::uint64_t* meter) const {
  ChatRequest req{task, prompt, payload, 0};
  std::string last_error;
  for (int attempt = 0; attempt <= kMaxReasks; ++attempt) {
    req.attempt = attempt;
    if (attempt > 0) {
      req.prompt = render_template(prompt_template("reask"), {{"prompt", prompt}, {"error", last_error}});
    }
    if (meter) ++*meter;
    const std::string reply = reasoning_->complete(req);
    try {
      return parse(reply);
    } catch (const ProtocolError& e) {
      last_error = e.what();
    }
  }
  throw ProtocolError(std::string(to_string(task)) + ": no usable answer after " +
                      std::to_string(kMaxReasks) + " re-asks (" + last_error + ")");
}

ClassificationResult ModelGateway::classify_sentence(const ClassificationRequest& req,
                                                     std::uint64_t* meter) const {
  std::string defs;
  for (TermKind k : kAllTermKinds) {
    defs += "- " + std::string(to_string(k)) + ": " + std::string(term_definition(k)) + "\n";
  }
  const std::string prompt =
      render_template(prompt_template("classify"), {{"definitions", defs}, {"sentence", req.sentence}});
  return ask(ModelTask::kClassify, prompt, {{"sentence", req.sentence}},
             [](std::string_view reply) { return ClassificationResult{parse_labels_reply(reply)}; }, meter);
}

ValuationResult ModelGateway::value_term(const ValuationRequest& req, std::uint64_t* meter) const {
  if (trim(req.clause_text).empty()) {
    return {not_mentioned_value(req.kind), "no clause addresses this term"};
  }
  std::string examples;
  nlohmann::json payload_examples = nlohmann::json::array();
  for (const TermExample& ex : req.examples) {
    examples += "- " + ex.license_id + " (value " + ex.value.to_display() + "): \"" + ex.clause + "\"\n";
    payload_examples.push_back(
        {{"license", ex.license_id}, {"clause", ex.clause}, {"value", term_value_to_json(ex.value)}});
  }
  if (examples.empty()) examples = "(none)\n";
  const std::string prompt = render_template(prompt_template("value"),
                                             {{"kind", std::string(to_string(req.kind))},
                                              {"definition", std::string(term_definition(req.kind))},
                                              {"domain", domain_description(req.kind)},
                                              {"clause", req.clause_text},
                                              {"examples", examples}});
  const nlohmann::json payload = {
      {"kind", to_string(req.kind)}, {"clause", req.clause_text}, {"examples", payload_examples}};
  const TermKind kind = req.kind;
  return ask(ModelTask::kValue, prompt, payload,
             [kind](std::string_view reply) { return parse_value_reply(kind, reply); }, meter);
}

std::vector<LicenseComponent> ModelGateway::segment_license_file(std::string_view text,
                                                               std::uint64_t* meter) const {
  const auto lines = split_lines(text);
  if (lines.empty()) return {};
  std::string numbered;
  nlohmann::json payload_lines = nlohmann::json::array();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view l = lines[i];
    if (!l.empty() && l.back() == '\n') l.remove_suffix(1);
    numbered += std::to_string(i + 1) + ": " + std::string(l) + "\n";
    payload_lines.push_back(std::string(l));
  }
  const std::string prompt = render_template(prompt_template("segment"), {{"text", numbered}});
  const std::size_t n = lines.size();
  try {
    const auto ranges = ask(ModelTask::kSegment, prompt, {{"lines", payload_lines}},
                            [n](std::string_view reply) { return parse_segment_reply(reply, n); }, meter);
    std::vector<LicenseComponent> out;
    for (const auto& [kind, range] : ranges) {
      std::string part;
      for (std::size_t i = range.first; i <= range.second; ++i) part += lines[i - 1];
      out.push_back({kind, std::move(part)});
    }
    return out;
  } catch (const ProtocolError&) {
    return {{ComponentKind::kPrimaryLicense, std::string(text)}};
  }
}

}  // namespace licvar
