#include "licvar/runtime.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "licvar/errors.hpp"

namespace licvar {

namespace {

void attach_kb_labels(MockReasoningBackend& mock, const KnowledgeBase* kb) {
  mock.set_label_lookup([kb](std::string_view normalized) -> std::optional<std::vector<TermKind>> {
    if (auto hit = kb->lookup_sentence(normalized)) return hit->labels;
    return std::nullopt;
  });
}

}  // namespace

RuntimeOptions RuntimeOptions::from_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError(file.string() + ": cannot open");
  RuntimeOptions o;
  o.config_file = file;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    o.backend = j.value("backend", o.backend);
    if (j.contains("data_dir")) o.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("kb")) o.kb_dir = j.at("kb").get<std::string>();
    o.parser.similarity_threshold = j.value("similarity_threshold", o.parser.similarity_threshold);
    o.parser.retrieval_k = j.value("retrieval_k", o.parser.retrieval_k);
    o.workers = j.value("workers", o.workers);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }
  return o;
}

std::filesystem::path RuntimeOptions::resolved_data_dir() const {
  return data_dir.empty() ? default_data_dir() : data_dir;
}

std::filesystem::path RuntimeOptions::resolved_kb_dir() const {
  return kb_dir.empty() ? resolved_data_dir() / "kb" : kb_dir;
}

Runtime make_runtime(const RuntimeOptions& opts, bool load_kb) {
  Runtime rt;
  if (opts.backend == "mock") {
    rt.embedder = std::make_shared<HashedTrigramEmbedder>();
    rt.reasoner = std::make_shared<MockReasoningBackend>(opts.resolved_data_dir() / "mock");
  } else if (opts.backend == "remote") {
    const RemoteConfig rc = opts.config_file ? RemoteConfig::from_file(*opts.config_file) : RemoteConfig::from_env();
    if (rc.endpoint.empty() || rc.model.empty()) {
      throw ValidationError("remote backend needs an endpoint and a model (config file or LICVAR_ENDPOINT/LICVAR_MODEL)");
    }
    rt.reasoner = std::make_shared<RemoteReasoningBackend>(rc);
    if (rc.embedding_model.empty()) {
      rt.embedder = std::make_shared<HashedTrigramEmbedder>();
    } else {
      rt.embedder = std::make_shared<RemoteEmbeddingBackend>(rc);
    }
  } else {
    throw ValidationError("unknown backend '" + opts.backend + "' (expected mock or remote)");
  }
  rt.gateway = std::make_unique<ModelGateway>(rt.reasoner, rt.embedder);
  if (load_kb) {
    rt.kb = std::make_unique<KnowledgeBase>(KnowledgeBase::load(opts.resolved_kb_dir(), *rt.embedder));
    if (auto* mock = dynamic_cast<MockReasoningBackend*>(rt.reasoner.get())) attach_kb_labels(*mock, rt.kb.get());
  }
  return rt;
}

Runtime make_mock_runtime(const std::filesystem::path& data_dir, const std::filesystem::path& kb_dir) {
  RuntimeOptions o;
  o.data_dir = data_dir;
  o.kb_dir = kb_dir;
  return make_runtime(o);
}

}  // namespace licvar
