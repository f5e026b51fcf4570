#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "licvar/errors.hpp"
#include "licvar/knowledge_base.hpp"
#include "licvar/license_model.hpp"
#include "licvar/model_gateway.hpp"

namespace licvar {

struct ParserConfig {
  double similarity_threshold = 0.9;  // α
  std::size_t retrieval_k = 3;

  // Throws ValidationError when α is outside [0, 1] or retrieval_k is 0.
  void check() const;
};

struct Conflict {
  TermKind kind;
  TermValue reused;
  TermValue inferred;
  TermValue resolved;
  friend bool operator==(const Conflict&, const Conflict&) = default;
};

struct ParseResult {
  TermVector term_vector;
  std::optional<BestMatch> matched_standard;
  double best_similarity = 0.0;  // cosine to the closest KB license, matched or not
  std::size_t sentence_count = 0;
  std::size_t reused_sentence_count = 0;
  std::size_t model_sentence_count = 0;
  std::uint64_t model_calls = 0;
  std::vector<Conflict> conflicts;
  // (candidate index, standard index) for every reused sentence.
  std::vector<std::pair<std::size_t, std::size_t>> reused_sentences;
  // Candidate indices of the sentences sent to the model.
  std::vector<std::size_t> model_sentences;
  // KB id for an unmodified standard, LicenseRef-<std>-variant-<hash> for a
  // modified one, LicenseRef-custom-<hash> otherwise.
  std::string license_ref;
  std::vector<std::string> notes;  // fallbacks taken, in order
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, ParseResult partial) : Error(what), partial_(std::move(partial)) {}
  const ParseResult& partial() const { return partial_; }

 private:
  ParseResult partial_;
};

// Matches the text against the KB, reuses annotations of sentences that
// appear verbatim in the matched standard, and asks the model only about the
// rest. Throws ValidationError on empty text, BackendError when the gateway's
// embedder differs from the KB's, and ParseError on transport failures.
ParseResult parse(std::string_view license_text, const KnowledgeBase& kb, const ModelGateway& gateway,
                  const ParserConfig& cfg = {});

// Classifies every sentence and values every term through the model. The KB
// supplies retrieval examples only.
ParseResult parse_baseline(std::string_view license_text, const KnowledgeBase& kb, const ModelGateway& gateway,
                           const ParserConfig& cfg = {});

nlohmann::json to_json(const ParseResult& r);

}  // namespace licvar
