#include <doctest.h>

#include <algorithm>
#include <random>

#include "licvar/errors.hpp"
#include "licvar/parser.hpp"
#include "test_support.hpp"

using namespace licvar;
using licvar::testing::fenced;
using licvar::testing::ScriptedBackend;

namespace {

const KnowledgeBase& kb() { return *testing::mock_runtime().kb; }

ModelGateway scripted_gateway(ScriptedBackend::Script script) {
  return ModelGateway(std::make_shared<ScriptedBackend>(std::move(script)),
                      std::make_shared<HashedTrigramEmbedder>());
}

void check_counts(const ParseResult& r) {
  CHECK(r.reused_sentence_count + r.model_sentence_count == r.sentence_count);
  CHECK(r.reused_sentences.size() == r.reused_sentence_count);
  CHECK(r.model_sentences.size() == r.model_sentence_count);
  std::vector<std::size_t> all = r.model_sentences;
  for (const auto& [c, s] : r.reused_sentences) all.push_back(c);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK(validate(r.term_vector).empty());
  for (const auto& c : r.conflicts) {
    CHECK(c.resolved == restrictiveness_max(c.kind, c.reused, c.inferred));
    CHECK(r.term_vector.get(c.kind) == c.resolved);
    CHECK(r.term_vector.provenance(c.kind) == Provenance::kConflictResolved);
  }
}

struct Variant {
  std::string name;
  std::string file;
  std::optional<std::string> base;
};

std::vector<Variant> variants() {
  auto j = nlohmann::json::parse(testing::read_text(testing::fixtures() / "variants" / "manifest.json"));
  std::vector<Variant> out;
  for (const auto& v : j.at("variants")) {
    out.push_back({v.at("name"), v.at("file"),
                   v.at("base").is_null() ? std::nullopt : std::optional<std::string>(v.at("base"))});
  }
  return out;
}

}  // namespace

TEST_SUITE("parser") {

TEST_CASE("configuration is validated") {
  CHECK_NOTHROW(ParserConfig{}.check());
  CHECK_THROWS_AS((ParserConfig{1.5, 3}.check()), ValidationError);
  CHECK_THROWS_AS((ParserConfig{-0.1, 3}.check()), ValidationError);
  CHECK_THROWS_AS((ParserConfig{0.9, 0}.check()), ValidationError);
  auto& rt = testing::mock_runtime();
  CHECK_THROWS_AS(parse("", kb(), *rt.gateway), ValidationError);
  CHECK_THROWS_AS(parse(" .. \n", kb(), *rt.gateway), ValidationError);
  CHECK_THROWS_AS(parse("MIT", kb(), *rt.gateway, (ParserConfig{2.0, 3})), ValidationError);
}

TEST_CASE("verbatim KB texts are reused without model calls") {
  auto rt = testing::fresh_mock_runtime();
  for (const auto& [id, lic] : kb().licenses()) {
    CAPTURE(id);
    auto r = parse(lic.full_text, kb(), *rt.gateway);
    CHECK(r.model_calls == 0);
    CHECK(r.term_vector.same_terms(lic.term_vector));
    CHECK(r.license_ref == id);
    REQUIRE(r.matched_standard);
    CHECK(r.matched_standard->license_id == id);
    CHECK(r.reused_sentence_count == r.sentence_count);
    CHECK(r.conflicts.empty());
    check_counts(r);
  }
  CHECK(rt.gateway->calls() == 0);
}

TEST_CASE("threshold one sends every sentence of a variant to the model") {
  auto rt = testing::fresh_mock_runtime();
  const std::string text = testing::read_text(testing::fixtures() / "variants" / "mit-advertising.txt");
  auto strict = parse(text, kb(), *rt.gateway, ParserConfig{1.0, 3});
  CHECK_FALSE(strict.matched_standard);
  CHECK(strict.reused_sentence_count == 0);
  CHECK(strict.model_sentence_count == strict.sentence_count);
  CHECK(strict.license_ref.rfind("LicenseRef-custom-", 0) == 0);
  check_counts(strict);

  auto loose = parse(text, kb(), *rt.gateway, ParserConfig{0.0, 3});
  REQUIRE(loose.matched_standard);
  CHECK(loose.matched_standard->license_id == "MIT");
  CHECK(loose.reused_sentence_count > 0);
  CHECK(loose.model_calls < strict.model_calls);
  CHECK(loose.license_ref.rfind("LicenseRef-MIT-variant-", 0) == 0);
  check_counts(loose);
}

TEST_CASE("the trademark variant sends only the rewritten sentences") {
  auto rt = testing::fresh_mock_runtime();
  const auto dir = testing::fixtures() / "variants";
  const std::string text = testing::read_text(dir / "apache-trademark.txt");
  const auto expected = nlohmann::json::parse(testing::read_text(dir / "apache-trademark.expected.json"));
  auto r = parse(text, kb(), *rt.gateway);
  auto units = segment(text);
  std::vector<std::string> sent;
  for (auto i : r.model_sentences) sent.push_back(units[i].text);
  CHECK(sent == expected.at("rewritten_sentences").get<std::vector<std::string>>());
  CHECK(r.term_vector.get(TermKind::kTrademarkLimitation) == TermValue::scalar(1));
  for (TermKind kind : kAllTermKinds) {
    CAPTURE(to_string(kind));
    CHECK(r.term_vector.get(kind) == kb().get("Apache-2.0").term_vector.get(kind));
  }
  CHECK(r.model_calls == rt.gateway->calls());
  check_counts(r);
}

TEST_CASE("fixture variants keep the count invariants and are deterministic") {
  auto rt = testing::fresh_mock_runtime();
  for (const auto& v : variants()) {
    CAPTURE(v.name);
    const std::string text = testing::read_text(testing::fixtures() / "variants" / v.file);
    const auto before = rt.gateway->calls();
    auto r = parse(text, kb(), *rt.gateway);
    CHECK(r.model_calls == rt.gateway->calls() - before);
    check_counts(r);
    if (v.base) {
      REQUIRE(r.matched_standard);
      CHECK(r.matched_standard->license_id == *v.base);
      CHECK(r.license_ref.rfind("LicenseRef-" + *v.base + "-variant-", 0) == 0);
    }
    auto again = parse(text, kb(), *rt.gateway);
    CHECK(again.term_vector == r.term_vector);
    CHECK(again.license_ref == r.license_ref);
    CHECK(again.model_calls == r.model_calls);
  }
}

TEST_CASE("baseline parse ignores the KB annotations") {
  auto rt = testing::fresh_mock_runtime();
  const auto& mit = kb().get("MIT");
  auto r = parse_baseline(mit.full_text, kb(), *rt.gateway);
  CHECK(r.model_sentence_count == r.sentence_count);
  CHECK(r.reused_sentence_count == 0);
  CHECK_FALSE(r.matched_standard);
  CHECK(r.model_calls > r.sentence_count);
  CHECK(r.model_calls <= r.sentence_count + kTermKindCount);
  CHECK(r.model_calls == rt.gateway->calls());
  check_counts(r);
}

TEST_CASE("proprietary text parses as a custom license") {
  auto rt = testing::fresh_mock_runtime();
  auto r = parse(testing::read_text(testing::fixtures() / "variants" / "acme-proprietary.txt"), kb(), *rt.gateway);
  CHECK_FALSE(r.matched_standard);
  CHECK(r.license_ref.rfind("LicenseRef-custom-", 0) == 0);
  CHECK(r.term_vector.copyright() == 0);
}

TEST_CASE("property: edited KB texts keep counts and resolve conflicts conservatively") {
  auto rt = testing::fresh_mock_runtime();
  std::mt19937 rng(2718);
  const std::vector<std::string> inserts = {
      "You may not use the Software for commercial purposes.",
      "Licensee must make the source code available to all users interacting with it over a network.",
      "No patent license is granted by this License.",
      "This license does not grant any rights to use the trademarks of the Licensor.",
      "Any modified version must carry prominent notices stating that you changed the files.",
      "The software may be distributed under the terms of the GNU General Public License version 3.",
  };
  std::vector<const KbLicense*> pool;
  for (const auto& [id, lic] : kb().licenses()) pool.push_back(&lic);
  for (int i = 0; i < 24; ++i) {
    const KbLicense& base = *pool[rng() % pool.size()];
    auto units = base.units();
    std::vector<std::string> parts;
    for (const auto& u : units) parts.push_back(u.text);
    const int edits = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < edits; ++e) {
      if (rng() % 2 && parts.size() > 2) {
        parts.erase(parts.begin() + static_cast<long>(rng() % parts.size()));
      } else {
        parts.insert(parts.begin() + static_cast<long>(rng() % (parts.size() + 1)), inserts[rng() % inserts.size()]);
      }
    }
    std::string text;
    for (const auto& p : parts) text += p + "\n\n";
    CAPTURE(base.id.id);
    auto r = parse(text, kb(), *rt.gateway);
    check_counts(r);
    if (r.matched_standard) {
      // Unchanged, reused sentences never reach the model.
      for (const auto& [c, s] : r.reused_sentences) {
        CHECK(segment(text)[c].normalized == kb().get(r.matched_standard->license_id).sentences[s].unit.normalized);
      }
    }
  }
}

TEST_CASE("disagreeing model values are merged with the KB value") {
  // GPL-3.0 plus one sentence the scripted model reads as weak copyleft.
  const std::string text = kb().get("GPL-3.0-only").full_text + "\n\nThis sentence only asks for file-level sharing.\n";
  auto gw = scripted_gateway([](const ChatRequest& req) {
    if (req.task == ModelTask::kClassify) return fenced("LABELS: [copyleft]");
    return fenced("VALUE: 1");
  });
  auto r = parse(text, kb(), gw);
  REQUIRE(r.matched_standard);
  REQUIRE(r.conflicts.size() == 1);
  CHECK(r.conflicts[0].kind == TermKind::kCopyleft);
  CHECK(r.conflicts[0].reused == TermValue::scalar(3));
  CHECK(r.conflicts[0].inferred == TermValue::scalar(1));
  CHECK(r.conflicts[0].resolved == TermValue::scalar(3));
  CHECK(r.term_vector.copyleft() == 3);
  CHECK(r.model_calls == 2);
  CHECK(r.license_ref.rfind("LicenseRef-GPL-3.0-only-variant-", 0) == 0);
  check_counts(r);
}

TEST_CASE("protocol failures fall back to conservative answers") {
  auto gw = scripted_gateway([](const ChatRequest&) { return std::string("I would rather not say."); });
  const std::string text = "Custom terms apply. You may run the program.";
  auto r = parse(text, kb(), gw, ParserConfig{1.0, 3});
  CHECK(r.sentence_count == 2);
  // Every sentence is labeled with every term, and every valuation falls back.
  CHECK(r.model_calls == 2 * 3 + kTermKindCount * 3);
  for (TermKind kind : kAllTermKinds) {
    CHECK(r.term_vector.get(kind) == most_restrictive_value(kind));
    CHECK(r.term_vector.provenance(kind) == Provenance::kDefault);
  }
  CHECK(r.notes.size() == 2 + kTermKindCount);
}

TEST_CASE("transport failures raise ParseError with the partial result") {
  int n = 0;
  auto gw = scripted_gateway([&](const ChatRequest&) -> std::string {
    if (++n == 2) throw TransportError("connection refused", 5, 0);
    return fenced("LABELS: none");
  });
  try {
    parse("First custom sentence. Second custom sentence. Third one.", kb(), gw, ParserConfig{1.0, 3});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("connection refused") != std::string::npos);
    CHECK(e.partial().sentence_count == 3);
    CHECK(e.partial().model_calls == 2);
  }
}

TEST_CASE("a gateway embedder that differs from the KB is refused") {
  class OtherEmbedder final : public EmbeddingBackend {
   public:
    std::string name() const override { return "other"; }
    std::size_t dimension() const override { return 1024; }
    Embedding embed(std::string_view) override { return Embedding(1024, 0.0f); }
  };
  ModelGateway gw(std::make_shared<ScriptedBackend>([](const ChatRequest&) { return fenced("LABELS: none"); }),
                  std::make_shared<OtherEmbedder>());
  CHECK_THROWS_AS(parse("Some text.", kb(), gw), BackendError);
}

TEST_CASE("JSON form") {
  auto& rt = testing::mock_runtime();
  auto j = to_json(parse(kb().get("ISC").full_text, kb(), *rt.gateway));
  CHECK(j.at("license_ref") == "ISC");
  CHECK(j.at("model_calls") == 0);
  CHECK(j.at("matched_standard").at("id") == "ISC");
  CHECK(term_vector_from_json(j.at("term_vector")).same_terms(kb().get("ISC").term_vector));
}

}  // TEST_SUITE
