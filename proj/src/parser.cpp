#include "licvar/parser.hpp"

#include <algorithm>
#include <cstdio>

#include "licvar/fingerprint.hpp"
#include "licvar/textproc.hpp"

namespace licvar {

namespace {

std::string hash8(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(normalized_string(text))));
  return std::string(buf, 8);
}

// Per-parse working state.
struct Work {
  std::vector<SentenceUnit> units;
  std::vector<std::vector<TermKind>> labels;  // per candidate unit
  std::vector<bool> reused;                   // per candidate unit
  ParseResult result;
};

std::set<TermKind> classify(const ModelGateway& gateway, const SentenceUnit& unit, ParseResult& r) {
  try {
    return gateway.classify_sentence({unit.text}, &r.model_calls).labels;
  } catch (const ProtocolError& e) {
    r.notes.push_back("sentence " + std::to_string(unit.index) + ": " + e.what() + "; labeled with every term");
    return {kAllTermKinds.begin(), kAllTermKinds.end()};
  }
}

TermValue value(const ModelGateway& gateway, const KnowledgeBase& kb, const ParserConfig& cfg, TermKind kind,
                const std::string& clause, ParseResult& r, bool* fell_back) {
  *fell_back = false;
  const auto examples = kb.retrieve_term_examples(kind, gateway.embed(clause), cfg.retrieval_k);
  try {
    return gateway.value_term({kind, clause, examples}, &r.model_calls).value;
  } catch (const ProtocolError& e) {
    r.notes.push_back(std::string(to_string(kind)) + ": " + e.what() + "; using the most restrictive value");
    *fell_back = true;
    return most_restrictive_value(kind);
  }
}

std::string join_clauses(const Work& w, TermKind kind, bool want_reused, bool want_novel) {
  std::string out;
  for (std::size_t i = 0; i < w.units.size(); ++i) {
    if (w.reused[i] ? !want_reused : !want_novel) continue;
    const auto& l = w.labels[i];
    if (std::find(l.begin(), l.end(), kind) == l.end()) continue;
    if (!out.empty()) out += '\n';
    out += w.units[i].text;
  }
  return out;
}

void classify_novel(Work& w, const ModelGateway& gateway) {
  for (std::size_t i = 0; i < w.units.size(); ++i) {
    if (w.reused[i]) continue;
    const auto labels = classify(gateway, w.units[i], w.result);
    w.labels[i].assign(labels.begin(), labels.end());
    w.result.model_sentences.push_back(i);
  }
  w.result.model_sentence_count = w.result.model_sentences.size();
}

template <typename Body>
ParseResult guarded(Work& w, Body body) {
  try {
    body();
  } catch (const TransportError& e) {
    throw ParseError(std::string("model service failed: ") + e.what(), w.result);
  }
  return w.result;
}

Work start(std::string_view text, const KnowledgeBase& kb, const ModelGateway& gateway, const ParserConfig& cfg) {
  cfg.check();
  Work w;
  w.units = segment(text);
  if (w.units.empty()) throw ValidationError("license text is empty");
  kb.require_backend(gateway.embedder());
  w.labels.resize(w.units.size());
  w.reused.assign(w.units.size(), false);
  w.result.sentence_count = w.units.size();
  return w;
}

}  // namespace

void ParserConfig::check() const {
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
    throw ValidationError("similarity threshold must lie in [0, 1]");
  }
  if (retrieval_k < 1) throw ValidationError("retrieval_k must be at least 1");
}

ParseResult parse(std::string_view license_text, const KnowledgeBase& kb, const ModelGateway& gateway,
                  const ParserConfig& cfg) {
  Work w = start(license_text, kb, gateway, cfg);
  ParseResult& r = w.result;
  return guarded(w, [&] {
    const BestMatch best = kb.best_match(gateway.embed(license_text));
    r.best_similarity = best.similarity;
    const KbLicense* standard = nullptr;
    if (best.similarity >= cfg.similarity_threshold) {
      r.matched_standard = best;
      standard = &kb.get(best.license_id);
      const SentenceDiff diff = diff_sentences(w.units, standard->units());
      for (const auto& [c, s] : diff.matched) {
        w.reused[c] = true;
        w.labels[c] = standard->sentences[s].labels;
        r.reused_sentences.emplace_back(c, s);
      }
      std::sort(r.reused_sentences.begin(), r.reused_sentences.end());
      r.reused_sentence_count = r.reused_sentences.size();
    }
    classify_novel(w, gateway);

    for (TermKind kind : kAllTermKinds) {
      const std::string reused = join_clauses(w, kind, true, false);
      const std::string novel = join_clauses(w, kind, false, true);
      bool fell_back = false;
      if (!novel.empty()) {
        const std::string both = join_clauses(w, kind, true, true);
        const TermValue inferred = value(gateway, kb, cfg, kind, both, r, &fell_back);
        if (fell_back) {
          r.term_vector.set(kind, inferred, Provenance::kDefault);
        } else if (!reused.empty()) {
          const TermValue& kb_value = standard->term_vector.get(kind);
          const TermValue resolved = restrictiveness_max(kind, kb_value, inferred);
          if (inferred == kb_value) {
            r.term_vector.set(kind, inferred, Provenance::kModelInferred);
          } else {
            r.conflicts.push_back({kind, kb_value, inferred, resolved});
            r.term_vector.set(kind, resolved, Provenance::kConflictResolved);
          }
        } else {
          r.term_vector.set(kind, inferred, Provenance::kModelInferred);
        }
      } else if (!reused.empty()) {
        r.term_vector.set(kind, standard->term_vector.get(kind), Provenance::kKnowledgeBaseReuse);
      } else if (standard && standard->term_clauses[index_of(kind)].empty()) {
        // The standard never addresses this term; its annotated value stands.
        r.term_vector.set(kind, standard->term_vector.get(kind), Provenance::kKnowledgeBaseReuse);
      } else {
        r.term_vector.set(kind, not_mentioned_value(kind), Provenance::kDefault);
      }
    }

    const bool unmodified = standard && r.model_sentence_count == 0 &&
                            r.reused_sentence_count == standard->sentences.size();
    if (unmodified && r.term_vector.same_terms(standard->term_vector)) {
      r.license_ref = standard->id.id;
    } else if (standard) {
      r.license_ref = "LicenseRef-" + standard->id.id + "-variant-" + hash8(license_text);
    } else {
      r.license_ref = "LicenseRef-custom-" + hash8(license_text);
    }
  });
}

ParseResult parse_baseline(std::string_view license_text, const KnowledgeBase& kb, const ModelGateway& gateway,
                           const ParserConfig& cfg) {
  Work w = start(license_text, kb, gateway, cfg);
  ParseResult& r = w.result;
  return guarded(w, [&] {
    r.best_similarity = kb.best_match(gateway.embed(license_text)).similarity;
    classify_novel(w, gateway);
    for (TermKind kind : kAllTermKinds) {
      const std::string clause = join_clauses(w, kind, false, true);
      bool fell_back = false;
      TermValue v;
      if (clause.empty()) {
        v = gateway.value_term({kind, clause, {}}, &r.model_calls).value;
      } else {
        v = value(gateway, kb, cfg, kind, clause, r, &fell_back);
      }
      r.term_vector.set(kind, v, fell_back || clause.empty() ? Provenance::kDefault : Provenance::kModelInferred);
    }
    r.license_ref = "LicenseRef-custom-" + hash8(license_text);
  });
}

nlohmann::json to_json(const ParseResult& r) {
  nlohmann::json j;
  j["term_vector"] = to_json(r.term_vector);
  if (r.matched_standard) {
    j["matched_standard"] = {{"id", r.matched_standard->license_id},
                             {"similarity", r.matched_standard->similarity}};
  } else {
    j["matched_standard"] = nullptr;
  }
  j["best_similarity"] = r.best_similarity;
  j["license_ref"] = r.license_ref;
  j["sentence_count"] = r.sentence_count;
  j["reused_sentence_count"] = r.reused_sentence_count;
  j["model_sentence_count"] = r.model_sentence_count;
  j["model_calls"] = r.model_calls;
  j["model_sentences"] = r.model_sentences;
  nlohmann::json conflicts = nlohmann::json::array();
  for (const Conflict& c : r.conflicts) {
    conflicts.push_back({{"kind", to_string(c.kind)},
                         {"reused", term_value_to_json(c.reused)},
                         {"inferred", term_value_to_json(c.inferred)},
                         {"resolved", term_value_to_json(c.resolved)}});
  }
  j["conflicts"] = conflicts;
  j["notes"] = r.notes;
  return j;
}

}  // namespace licvar
