#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "licvar/knowledge_base.hpp"
#include "licvar/model_gateway.hpp"
#include "licvar/parser.hpp"

namespace licvar {

// Settings shared by the CLI commands. A JSON config file may hold
// "backend", "data_dir", "kb", "similarity_threshold", "retrieval_k",
// "workers" and the remote keys read by RemoteConfig::from_file.
struct RuntimeOptions {
  std::string backend = "mock";  // "mock" or "remote"
  std::filesystem::path data_dir;  // empty: default_data_dir()
  std::filesystem::path kb_dir;    // empty: <data_dir>/kb
  std::optional<std::filesystem::path> config_file;
  ParserConfig parser;
  std::size_t workers = 4;

  // Fills fields from the config file; values already set explicitly on the
  // command line are applied afterwards by the caller.
  static RuntimeOptions from_config(const std::filesystem::path& file);
  std::filesystem::path resolved_data_dir() const;
  std::filesystem::path resolved_kb_dir() const;
};

// Backends, gateway and knowledge base wired together. The mock backend
// answers classification requests for sentences found in the knowledge base
// with their annotated labels.
struct Runtime {
  std::shared_ptr<EmbeddingBackend> embedder;
  std::shared_ptr<ReasoningBackend> reasoner;
  std::unique_ptr<ModelGateway> gateway;
  std::unique_ptr<KnowledgeBase> kb;
};

// Throws ValidationError on an unknown backend name.
Runtime make_runtime(const RuntimeOptions& opts, bool load_kb = true);

// Mock gateway over an already loaded KB.
Runtime make_mock_runtime(const std::filesystem::path& data_dir, const std::filesystem::path& kb_dir);

}  // namespace licvar
