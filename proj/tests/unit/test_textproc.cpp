#include <doctest.h>

#include <random>

#include "licvar/fingerprint.hpp"
#include "licvar/textproc.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace licvar;

namespace {

std::vector<std::string> texts_of(const std::vector<SentenceUnit>& units) {
  std::vector<std::string> out;
  for (const auto& u : units) out.push_back(u.text);
  return out;
}

void check_unit_invariants(std::string_view doc, const std::vector<SentenceUnit>& units) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    CHECK(u.index == i);
    CHECK_FALSE(u.normalized.empty());
    CHECK(u.normalized == normalized_string(u.text));
    CHECK(u.begin < u.end);
    CHECK(u.end <= doc.size());
    CHECK(u.begin >= prev_end);
    CHECK(doc.substr(u.begin, u.end - u.begin) == u.text);
    prev_end = u.end;
  }
  // Units cover every word of the document.
  std::string joined;
  for (const auto& u : units) joined += u.normalized + " ";
  CHECK(normalized_string(joined) == normalized_string(doc));
}

}  // namespace

TEST_SUITE("textproc") {

TEST_CASE("sentences split on terminal punctuation") {
  auto units = segment("The software is free. You may copy it! Why not? Yes.");
  CHECK(texts_of(units) ==
        std::vector<std::string>{"The software is free.", "You may copy it!", "Why not?", "Yes."});
}

TEST_CASE("abbreviations and section numbers do not end sentences") {
  auto units = segment("See Sec. 4.2 of the License, e.g. the notice. Done.");
  REQUIRE(units.size() == 2);
  CHECK(units[0].text == "See Sec. 4.2 of the License, e.g. the notice.");
}

TEST_CASE("headings and list items are units") {
  const std::string doc =
      "MIT License\n\nRedistribution is permitted provided that:\n\n"
      "1. Redistributions of source code must retain the notice.\n"
      "2. Redistributions in binary form must reproduce the notice.\n";
  auto units = segment(doc);
  REQUIRE(units.size() == 4);
  CHECK(units[0].heading);
  CHECK(units[0].text == "MIT License");
  CHECK_FALSE(units[1].heading);
  CHECK(units[2].text.find("Redistributions of source code") != std::string::npos);
  CHECK(units[3].section_hint == std::optional<std::string>("MIT License"));
  check_unit_invariants(doc, units);
}

TEST_CASE("empty and punctuation-only documents") {
  CHECK(segment("").empty());
  CHECK(segment("   \n\n  ").empty());
  CHECK(segment("----").empty());
}

TEST_CASE("unit invariants hold on the bundled license texts") {
  for (const auto& entry : std::filesystem::directory_iterator(testing::fixtures() / "texts")) {
    const std::string doc = testing::read_text(entry.path());
    CAPTURE(entry.path().filename().string());
    auto units = segment(doc);
    CHECK_FALSE(units.empty());
    check_unit_invariants(doc, units);
  }
}

TEST_CASE("property: segmentation is deterministic and covers random documents") {
  std::mt19937 rng(4242);
  const std::vector<std::string> pieces = {"The Licensor grants a license", ".", "; and", "\n\n",
                                           "1. ", "e.g.", " Section 3", "!", "(a) ", "WARRANTY",
                                           " you may", "\n", "?", "  "};
  for (int i = 0; i < 200; ++i) {
    std::string doc;
    const int n = static_cast<int>(rng() % 30);
    for (int j = 0; j < n; ++j) doc += pieces[rng() % pieces.size()];
    auto a = segment(doc);
    CHECK(a == segment(doc));
    check_unit_invariants(doc, a);
  }
}

TEST_CASE("diff aligns identical and modified documents") {
  auto std_units = segment("Alpha one. Beta two. Gamma three. Delta four.");
  auto cand = segment("Alpha one. Beta TWO! Inserted sentence here. Gamma three.");
  auto d = diff_sentences(cand, std_units);
  CHECK(d.matched == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {3, 2}});
  CHECK(d.candidate_only == std::vector<std::size_t>{2});
  CHECK(d.standard_only == std::vector<std::size_t>{3});
}

TEST_CASE("property: diff matches the LCS oracle and partitions both sides") {
  std::mt19937 rng(99);
  const std::vector<std::string> sentences = {"Alpha one.", "Beta two.", "Gamma three.", "Delta four.",
                                              "Epsilon five.", "Zeta six."};
  auto random_doc = [&] {
    std::string doc;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) doc += sentences[rng() % sentences.size()] + " ";
    return doc;
  };
  for (int i = 0; i < 300; ++i) {
    auto a = segment(random_doc());
    auto b = segment(random_doc());
    auto d = diff_sentences(a, b);
    std::vector<std::string> na, nb;
    for (const auto& u : a) na.push_back(u.normalized);
    for (const auto& u : b) nb.push_back(u.normalized);
    CHECK(d.matched.size() == oracle::lcs_length(na, nb));
    CHECK(d.matched.size() + d.candidate_only.size() == a.size());
    CHECK(d.matched.size() + d.standard_only.size() == b.size());
    for (std::size_t k = 0; k < d.matched.size(); ++k) {
      CHECK(na[d.matched[k].first] == nb[d.matched[k].second]);
      if (k > 0) {
        CHECK(d.matched[k].first > d.matched[k - 1].first);
        CHECK(d.matched[k].second > d.matched[k - 1].second);
      }
    }
  }
}

}  // TEST_SUITE
