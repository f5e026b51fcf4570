#include "licvar/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "licvar/errors.hpp"

namespace licvar {

namespace fs = std::filesystem;

namespace {

constexpr int kManifestSchema = 1;
const std::string kBuiltinBackend = HashedTrigramEmbedder().name();

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write");
  out << content;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const fs::path& file) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(file.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(file.string() + ": field '" + key + "' has the wrong type");
  }
}

void compute_clauses(KbLicense& lic) {
  for (auto& c : lic.term_clauses) c.clear();
  for (const KbSentence& s : lic.sentences) {
    for (TermKind k : s.labels) {
      std::string& c = lic.term_clauses[index_of(k)];
      if (!c.empty()) c += '\n';
      c += s.unit.text;
    }
  }
}

void embed_license(KbLicense& lic, EmbeddingBackend& embedder) {
  lic.embedding = embedder.embed(lic.full_text);
  for (TermKind k : kAllTermKinds) {
    const std::string& c = lic.term_clauses[index_of(k)];
    lic.clause_embeddings[index_of(k)] = c.empty() ? Embedding{} : embedder.embed(c);
  }
}

KbLicense load_license(const fs::path& dir, const std::string& id) {
  const fs::path text_file = dir / "license.txt";
  const fs::path ann_file = dir / "annotation.json";
  if (!fs::is_directory(dir)) throw SchemaError(dir.string() + ": license directory missing");
  const nlohmann::json ann = read_json(ann_file);

  KbLicense lic;
  const auto ann_id = field<std::string>(ann, "id", ann_file);
  if (ann_id != id) throw SchemaError(ann_file.string() + ": field 'id' is " + ann_id + ", expected " + id);
  lic.id = make_license_id(ann_id, ann.value("name", std::string{}));
  lic.full_text = read_file(text_file);

  try {
    lic.term_vector = term_vector_from_json(ann.at("term_vector"));
  } catch (const SchemaError& e) {
    throw SchemaError(ann_file.string() + ": term_vector: " + e.what());
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(ann_file.string() + ": missing field 'term_vector'");
  }
  for (const Violation& v : validate(lic.term_vector)) {
    throw SchemaError(ann_file.string() + ": term_vector: " + v.message);
  }

  const auto units = segment(lic.full_text);
  for (const auto& u : units) lic.sentences.push_back({u, {}});

  const auto sentences = ann.contains("sentences") ? ann.at("sentences") : nlohmann::json::array();
  if (!sentences.is_array()) throw SchemaError(ann_file.string() + ": field 'sentences' must be an array");
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    const std::string where = ann_file.string() + ": sentences[" + std::to_string(i) + "]";
    const std::string norm = normalized_string(field<std::string>(s, "text", ann_file));
    while (cursor < units.size() && units[cursor].normalized != norm) ++cursor;
    if (cursor == units.size()) throw SchemaError(where + ": text not found in license.txt (or out of order)");
    std::vector<TermKind> labels;
    for (const auto& name : field<std::vector<std::string>>(s, "labels", ann_file)) {
      if (name == "other") continue;
      auto kind = term_kind_from_string(name);
      if (!kind) throw SchemaError(where + ": unknown term kind '" + name + "'");
      if (std::find(labels.begin(), labels.end(), *kind) == labels.end()) labels.push_back(*kind);
    }
    std::sort(labels.begin(), labels.end());
    lic.sentences[cursor].labels = std::move(labels);
    ++cursor;
  }
  compute_clauses(lic);
  return lic;
}

nlohmann::json embedding_to_json(const Embedding& e) { return nlohmann::json(e); }

}  // namespace

fs::path default_data_dir() {
  if (const char* env = std::getenv("LICVAR_DATA_DIR"); env != nullptr && *env != '\0') return env;
#ifdef LICVAR_DEFAULT_DATA_DIR
  return LICVAR_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

std::vector<SentenceUnit> KbLicense::units() const {
  std::vector<SentenceUnit> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.unit);
  return out;
}

KnowledgeBase KnowledgeBase::load(const fs::path& dir, EmbeddingBackend& embedder) {
  const fs::path manifest_file = dir / "manifest.json";
  if (!fs::exists(manifest_file)) throw SchemaError(manifest_file.string() + ": missing");
  const nlohmann::json manifest = read_json(manifest_file);

  KnowledgeBase kb;
  if (field<int>(manifest, "schema_version", manifest_file) != kManifestSchema) {
    throw SchemaError(manifest_file.string() + ": unsupported schema_version");
  }
  kb.info_.embedding_backend = field<std::string>(manifest, "embedding_backend", manifest_file);
  kb.info_.dimension = field<std::size_t>(manifest, "dimension", manifest_file);
  const auto fp = field<nlohmann::json>(manifest, "fingerprint", manifest_file);
  kb.info_.fingerprint = {field<std::size_t>(fp, "k", manifest_file), field<std::size_t>(fp, "w", manifest_file)};
  kb.info_.note = manifest.value("annotations", std::string{});
  const auto ids = field<std::vector<std::string>>(manifest, "licenses", manifest_file);
  if (ids.empty()) throw SchemaError(manifest_file.string() + ": field 'licenses' is empty");

  for (const std::string& id : ids) {
    if (kb.licenses_.count(id)) throw SchemaError(manifest_file.string() + ": duplicate license " + id);
    kb.licenses_.emplace(id, load_license(dir / id, id));
  }

  const fs::path emb_file = dir / "embeddings.json";
  if (fs::exists(emb_file)) {
    const nlohmann::json emb = read_json(emb_file);
    if (field<std::string>(emb, "embedding_backend", emb_file) != kb.info_.embedding_backend) {
      throw SchemaError(emb_file.string() + ": backend differs from manifest");
    }
    for (auto& [id, lic] : kb.licenses_) {
      const auto entry = field<nlohmann::json>(field<nlohmann::json>(emb, "licenses", emb_file), id.c_str(), emb_file);
      lic.embedding = field<Embedding>(entry, "text", emb_file);
      const auto clauses = field<nlohmann::json>(entry, "clauses", emb_file);
      for (TermKind k : kAllTermKinds) {
        const std::string key(to_string(k));
        lic.clause_embeddings[index_of(k)] =
            clauses.contains(key) ? clauses.at(key).get<Embedding>() : Embedding{};
      }
      if (lic.embedding.size() != kb.info_.dimension) {
        throw SchemaError(emb_file.string() + ": " + id + ": vector dimension differs from manifest");
      }
    }
  } else {
    if (embedder.name() != kb.info_.embedding_backend) {
      throw BackendError("knowledge base was built with '" + kb.info_.embedding_backend +
                         "' but vectors are missing and the active backend is '" + embedder.name() + "'");
    }
    for (auto& [id, lic] : kb.licenses_) embed_license(lic, embedder);
  }
  kb.build_index();
  return kb;
}

void KnowledgeBase::save(const fs::path& dir) const {
  fs::create_directories(dir);
  nlohmann::json manifest = {
      {"schema_version", kManifestSchema},
      {"embedding_backend", info_.embedding_backend},
      {"dimension", info_.dimension},
      {"fingerprint", {{"k", info_.fingerprint.k}, {"w", info_.fingerprint.w}}},
      {"annotations", info_.note},
      {"licenses", nlohmann::json::array()},
  };
  nlohmann::json emb = {{"embedding_backend", info_.embedding_backend}, {"licenses", nlohmann::json::object()}};
  for (const auto& [id, lic] : licenses_) {
    manifest["licenses"].push_back(id);
    const fs::path sub = dir / id;
    fs::create_directories(sub);
    write_file(sub / "license.txt", lic.full_text);
    nlohmann::json sentences = nlohmann::json::array();
    for (const KbSentence& s : lic.sentences) {
      if (s.labels.empty()) continue;
      nlohmann::json labels = nlohmann::json::array();
      for (TermKind k : s.labels) labels.push_back(to_string(k));
      sentences.push_back({{"text", s.unit.text}, {"labels", labels}});
    }
    nlohmann::json tv = to_json(lic.term_vector, false);
    const nlohmann::json ann = {{"id", id}, {"name", lic.id.name}, {"term_vector", tv}, {"sentences", sentences}};
    write_file(sub / "annotation.json", ann.dump(2) + "\n");

    nlohmann::json clauses = nlohmann::json::object();
    for (TermKind k : kAllTermKinds) {
      if (!lic.clause_embeddings[index_of(k)].empty()) {
        clauses[std::string(to_string(k))] = embedding_to_json(lic.clause_embeddings[index_of(k)]);
      }
    }
    emb["licenses"][id] = {{"text", embedding_to_json(lic.embedding)}, {"clauses", clauses}};
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  const fs::path emb_file = dir / "embeddings.json";
  if (info_.embedding_backend == kBuiltinBackend) {
    fs::remove(emb_file);
  } else {
    write_file(emb_file, emb.dump() + "\n");
  }
}

KnowledgeBase KnowledgeBase::rebuilt(EmbeddingBackend& embedder) const {
  KnowledgeBase kb = *this;
  kb.info_.embedding_backend = embedder.name();
  for (auto& [id, lic] : kb.licenses_) {
    compute_clauses(lic);
    embed_license(lic, embedder);
  }
  kb.info_.dimension = kb.licenses_.empty() ? embedder.dimension() : kb.licenses_.begin()->second.embedding.size();
  kb.build_index();
  return kb;
}

void KnowledgeBase::build_index() {
  sentence_index_.clear();
  for (const auto& [id, lic] : licenses_) {
    for (const KbSentence& s : lic.sentences) {
      sentence_index_[s.unit.normalized].push_back({id, s.unit.index, s.labels});
    }
  }
}

const KbLicense* KnowledgeBase::find(std::string_view id) const {
  auto it = licenses_.find(std::string(id));
  return it == licenses_.end() ? nullptr : &it->second;
}

const KbLicense& KnowledgeBase::get(std::string_view id) const {
  if (const KbLicense* lic = find(id)) return *lic;
  throw NotFoundError("license not in knowledge base: " + std::string(id));
}

void KnowledgeBase::require_backend(const EmbeddingBackend& embedder) const {
  if (embedder.name() != info_.embedding_backend) {
    throw BackendError("knowledge base vectors come from '" + info_.embedding_backend +
                       "'; refusing queries embedded with '" + embedder.name() + "'");
  }
}

BestMatch KnowledgeBase::best_match(const Embedding& candidate) const {
  if (licenses_.empty()) throw NotFoundError("knowledge base is empty");
  if (candidate.size() != info_.dimension) {
    throw BackendError("embedding dimension " + std::to_string(candidate.size()) +
                       " does not match knowledge base dimension " + std::to_string(info_.dimension));
  }
  BestMatch best{"", -2.0};
  for (const auto& [id, lic] : licenses_) {  // id order, so strict > keeps the smallest on ties
    const double s = cosine(candidate, lic.embedding);
    if (s > best.similarity) best = {id, s};
  }
  return best;
}

std::vector<TermExample> KnowledgeBase::retrieve_term_examples(TermKind kind, const Embedding& query,
                                                               std::size_t k) const {
  if (k == 0) throw ValidationError("retrieve_term_examples: k must be at least 1");
  std::vector<std::pair<double, const KbLicense*>> scored;
  for (const auto& [id, lic] : licenses_) {
    const Embedding& e = lic.clause_embeddings[index_of(kind)];
    if (e.empty()) continue;
    scored.emplace_back(query.size() == e.size() ? cosine(query, e) : 0.0, &lic);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<TermExample> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) {
    const KbLicense& lic = *scored[i].second;
    out.push_back({lic.id.id, lic.term_clauses[index_of(kind)], lic.term_vector.get(kind)});
  }
  return out;
}

std::optional<SentenceHit> KnowledgeBase::lookup_sentence(std::string_view normalized) const {
  auto it = sentence_index_.find(std::string(normalized));
  if (it == sentence_index_.end() || it->second.empty()) return std::nullopt;
  return it->second.front();
}

std::vector<std::string> check_kb_invariants(const KnowledgeBase& kb) {
  std::vector<std::string> problems;
  for (const auto& [id, lic] : kb.licenses()) {
    for (const Violation& v : validate(lic.term_vector)) problems.push_back(id + ": " + v.message);
    std::array<std::string, kTermKindCount> expected;
    for (const KbSentence& s : lic.sentences) {
      if (!kb.lookup_sentence(s.unit.normalized)) {
        problems.push_back(id + ": sentence " + std::to_string(s.unit.index) + " missing from index");
      }
      for (TermKind k : s.labels) {
        auto& c = expected[index_of(k)];
        if (!c.empty()) c += '\n';
        c += s.unit.text;
      }
    }
    if (expected != lic.term_clauses) problems.push_back(id + ": clause groups disagree with sentence labels");
    if (lic.embedding.size() != kb.built_with().dimension) {
      problems.push_back(id + ": embedding dimension differs from manifest");
      continue;
    }
    const BestMatch self = kb.best_match(lic.embedding);
    if (self.license_id != id || std::abs(self.similarity - 1.0) > 1e-6) {
      problems.push_back(id + ": best match of its own text is " + self.license_id);
    }
  }
  return problems;
}

}  // namespace licvar
