#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "licvar/fingerprint.hpp"
#include "licvar/license_model.hpp"
#include "licvar/model_gateway.hpp"
#include "licvar/textproc.hpp"

namespace licvar {

// $LICVAR_DATA_DIR, else the directory configured at build time.
std::filesystem::path default_data_dir();

struct KbSentence {
  SentenceUnit unit;
  std::vector<TermKind> labels;  // empty: "other"
  friend bool operator==(const KbSentence&, const KbSentence&) = default;
};

struct KbLicense {
  LicenseId id;
  std::string full_text;
  std::vector<KbSentence> sentences;  // every unit of full_text, in order
  TermVector term_vector;
  std::array<std::string, kTermKindCount> term_clauses;  // labeled sentences joined by '\n'
  Embedding embedding;
  std::array<Embedding, kTermKindCount> clause_embeddings;  // empty when there are no clauses

  std::vector<SentenceUnit> units() const;
  friend bool operator==(const KbLicense&, const KbLicense&) = default;
};

struct SentenceHit {
  std::string license_id;
  std::size_t index;
  std::vector<TermKind> labels;
  friend bool operator==(const SentenceHit&, const SentenceHit&) = default;
};

struct KbBuildInfo {
  std::string embedding_backend;
  std::size_t dimension = 0;
  WinnowParams fingerprint;
  std::string note;
  friend bool operator==(const KbBuildInfo&, const KbBuildInfo&) = default;
};

struct BestMatch {
  std::string license_id;
  double similarity = 0.0;
};

// Annotated standard licenses. Immutable after load.
//
// Layout:
//   manifest.json       {"schema_version", "embedding_backend", "dimension",
//                        "fingerprint": {"k", "w"}, "annotations", "licenses": [ids]}
//   <ID>/license.txt    canonical text
//   <ID>/annotation.json {"id", "name", "term_vector": {...},
//                        "sentences": [{"text", "labels": [...]}]}
//   embeddings.json     optional; precomputed vectors for non-builtin backends
//
// Only labeled sentences are listed in annotation.json; they are matched to
// the segmented license text by normalized form, in order.
class KnowledgeBase {
 public:
  // Throws SchemaError naming the file and field on malformed input, and
  // BackendError when vectors must be computed with a backend other than the
  // one named in the manifest.
  static KnowledgeBase load(const std::filesystem::path& dir, EmbeddingBackend& embedder);
  // Writes the layout above. embeddings.json is written unless the vectors
  // come from the builtin embedder, which recomputes them at load.
  void save(const std::filesystem::path& dir) const;

  // Recomputes every vector with `embedder` and records it in the build info.
  KnowledgeBase rebuilt(EmbeddingBackend& embedder) const;

  const std::map<std::string, KbLicense>& licenses() const { return licenses_; }
  const KbLicense* find(std::string_view id) const;
  const KbLicense& get(std::string_view id) const;  // NotFoundError
  const KbBuildInfo& built_with() const { return info_; }
  std::size_t size() const { return licenses_.size(); }

  // Cosine argmax; ties go to the lexicographically smallest id. Throws
  // BackendError on a dimension mismatch and NotFoundError on an empty KB.
  BestMatch best_match(const Embedding& candidate) const;

  // Top-k clause groups of `kind` by cosine similarity to `query`.
  std::vector<TermExample> retrieve_term_examples(TermKind kind, const Embedding& query, std::size_t k) const;

  // Exact lookup by normalized sentence; the first hit in license-id order.
  std::optional<SentenceHit> lookup_sentence(std::string_view normalized) const;

  // Refuses embeddings from a different backend.
  void require_backend(const EmbeddingBackend& embedder) const;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.info_ == b.info_ && a.licenses_ == b.licenses_;
  }

 private:
  void build_index();

  KbBuildInfo info_;
  std::map<std::string, KbLicense> licenses_;
  std::unordered_map<std::string, std::vector<SentenceHit>> sentence_index_;
};

// Structural invariants of a loaded KB: vectors validate, clause groups match
// the labels, the sentence index covers every sentence, and every license is
// its own best match. Returns one message per problem.
std::vector<std::string> check_kb_invariants(const KnowledgeBase& kb);

}  // namespace licvar
