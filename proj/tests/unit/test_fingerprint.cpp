#include <doctest.h>

#include <random>
#include <stdexcept>

#include "licvar/errors.hpp"
#include "licvar/fingerprint.hpp"
#include "oracles.hpp"

using namespace licvar;

TEST_SUITE("fingerprint") {

TEST_CASE("normalization lowercases and collapses punctuation") {
  CHECK(normalized_string("Hello,   World!") == "hello world");
  CHECK(normalized_string("  (c) 2024 ACME\tInc.\n") == "c 2024 acme inc");
  CHECK(normalized_string("") == "");
  CHECK(normalized_string("--- ...") == "");
  CHECK(normalized_string("\xC3\x89t\xC3\xA9") == "\xC3\xA9t\xC3\xA9");
  CHECK(normalized_string("a\xE2\x80\x94" "b") == "a b");  // em dash separates
}

TEST_CASE("normalization offsets point back into the source") {
  const std::string raw = "  MIT License,\nCopyright";
  auto n = normalize(raw);
  REQUIRE(n.offsets.size() == n.text.size());
  for (std::size_t i = 0; i < n.text.size(); ++i) {
    if (n.text[i] == ' ') continue;
    CHECK(std::tolower(static_cast<unsigned char>(raw[n.offsets[i]])) == n.text[i]);
  }
  CHECK(std::is_sorted(n.offsets.begin(), n.offsets.end()));
}

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("kgram hashes") {
  auto h = kgram_hashes("abcde", 3);
  REQUIRE(h.size() == 3);
  CHECK(h[1] == fnv1a64("bcd"));
  CHECK(kgram_hashes("ab", 3).empty());
}

TEST_CASE("winnow parameters are validated") {
  auto n = normalize("some text here");
  CHECK_THROWS_AS(winnow(n, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(winnow(n, 8, 0), std::invalid_argument);
}

TEST_CASE("short texts") {
  CHECK(winnow(normalize("abc"), 8, 4).signatures.empty());
  auto one = winnow(normalize("abcdefghij"), 8, 4);  // three k-grams, one partial window
  CHECK(one.signatures.size() == 1);
  CHECK(one.signatures == oracle::winnow("abcdefghij", 8, 4));
}

TEST_CASE("property: winnow equals the brute-force oracle") {
  std::mt19937 rng(12345);
  for (int i = 0; i < 300; ++i) {
    const std::string s = oracle::random_text(rng, 0, 400);
    const std::size_t k = 2 + rng() % 10;
    const std::size_t w = 1 + rng() % 8;
    auto n = normalize(s);
    CAPTURE(s);
    CHECK(winnow(n, k, w).signatures == oracle::winnow(n.text, k, w));
  }
}

TEST_CASE("property: every window of the text contributes a signature") {
  std::mt19937 rng(777);
  for (int i = 0; i < 100; ++i) {
    auto n = normalize(oracle::random_text(rng, 40, 300));
    auto fp = winnow(n, 5, 4);
    auto h = kgram_hashes(n.text, 5);
    for (std::size_t s = 0; s + 4 <= h.size(); ++s) {
      bool hit = false;
      for (std::size_t j = s; j < s + 4; ++j) hit = hit || fp.signatures.count(h[j]);
      CHECK(hit);
    }
  }
}

TEST_CASE("matching score") {
  const std::string a = "Permission is hereby granted, free of charge, to any person obtaining a copy";
  const std::string b = "Completely unrelated words about gardening and tomato plants in summer";
  CHECK(text_similarity(a, a) == doctest::Approx(1.0));
  CHECK(text_similarity(a, "PERMISSION is hereby granted -- free of charge; to any person obtaining a copy") ==
        doctest::Approx(1.0));
  CHECK(text_similarity(a, b) < 0.05);
  CHECK(matching_score(winnow(normalize("")), winnow(normalize(""))) == 1.0);
  auto x = winnow(normalize(a), 8, 4);
  auto y = winnow(normalize(a), 6, 4);
  CHECK_THROWS_AS(matching_score(x, y), IncompatibleFingerprintError);
}

TEST_CASE("property: score is symmetric and bounded") {
  std::mt19937 rng(31337);
  for (int i = 0; i < 100; ++i) {
    auto a = oracle::random_text(rng, 0, 200);
    auto b = oracle::random_text(rng, 0, 200);
    double s = text_similarity(a, b);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(s == text_similarity(b, a));
  }
}

}  // TEST_SUITE
