#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "licvar/license_model.hpp"

namespace licvar {

using Embedding = std::vector<float>;

double cosine(const Embedding& a, const Embedding& b);

// --- Embeddings --------------------------------------------------------------

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual Embedding embed(std::string_view text) = 0;
};

// Character 3-gram term frequencies over normalized text, hashed into 1024
// buckets and L2-normalized. Empty text maps to the zero vector.
class HashedTrigramEmbedder final : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDimension = 1024;
  std::string name() const override { return "hashed-trigram-1024"; }
  std::size_t dimension() const override { return kDimension; }
  Embedding embed(std::string_view text) override;
};

// --- Reasoning ---------------------------------------------------------------

enum class ModelTask { kClassify, kValue, kSegment };
std::string_view to_string(ModelTask task);

// One request to an instruction-following model. `prompt` is the rendered
// template; `payload` carries the same inputs in structured form for
// backends that do not read prose.
struct ChatRequest {
  ModelTask task;
  std::string prompt;
  nlohmann::json payload;
  int attempt = 0;  // 0 for the first ask, then 1, 2 for re-asks
};

class ReasoningBackend {
 public:
  virtual ~ReasoningBackend() = default;
  virtual std::string name() const = 0;

  // Counts the request, then delegates.
  std::string complete(const ChatRequest& request) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_complete(request);
  }
  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual std::string do_complete(const ChatRequest& request) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
};

// Offline backend driven by rule tables. Classification of known standard
// sentences is delegated to `known_labels` (wired to the knowledge base);
// other sentences go through keyword rules. Valuation applies ordered
// pattern rules per kind, then falls back to the best retrieved example,
// then to the not-mentioned value.
class MockReasoningBackend final : public ReasoningBackend {
 public:
  using LabelLookup = std::function<std::optional<std::vector<TermKind>>(std::string_view normalized)>;

  // Loads classify_rules.json and value_rules.json from `rules_dir`.
  explicit MockReasoningBackend(const std::filesystem::path& rules_dir);

  void set_label_lookup(LabelLookup lookup) { known_labels_ = std::move(lookup); }
  std::string name() const override { return "mock"; }

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  struct ClassifyRule {
    std::regex pattern;
    std::vector<TermKind> labels;
  };
  struct ValueRule {
    std::regex pattern;
    nlohmann::json value;
  };

  std::string classify(const nlohmann::json& payload) const;
  std::string value(const nlohmann::json& payload) const;
  std::string segment(const nlohmann::json& payload) const;

  LabelLookup known_labels_;
  std::vector<ClassifyRule> classify_rules_;
  std::array<std::vector<ValueRule>, kTermKindCount> value_rules_;
};

struct RemoteConfig {
  std::string endpoint;  // base URL, e.g. https://host/v1
  std::string model;
  std::string api_key;
  std::string embedding_model;
  std::size_t embedding_dimension = 0;  // 0: learned from the first response
  int max_inflight = 4;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};

  // LICVAR_ENDPOINT, LICVAR_MODEL, LICVAR_API_KEY, LICVAR_EMBEDDING_MODEL,
  // LICVAR_MAX_INFLIGHT, LICVAR_TIMEOUT (seconds).
  static RemoteConfig from_env();
  // Same keys in lower case without the prefix; environment wins.
  static RemoteConfig from_file(const std::filesystem::path& path);
};

// Bounds the number of concurrent requests to a remote service.
class InflightLimiter {
 public:
  explicit InflightLimiter(int limit) : available_(limit < 1 ? 1 : limit) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

// OpenAI-compatible chat completions with temperature 0.
class RemoteReasoningBackend final : public ReasoningBackend {
 public:
  explicit RemoteReasoningBackend(RemoteConfig cfg);
  std::string name() const override { return "remote:" + cfg_.model; }

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  RemoteConfig cfg_;
  InflightLimiter limiter_;
};

class RemoteEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit RemoteEmbeddingBackend(RemoteConfig cfg);
  std::string name() const override { return "remote:" + cfg_.embedding_model; }
  std::size_t dimension() const override;
  Embedding embed(std::string_view text) override;

 private:
  RemoteConfig cfg_;
  InflightLimiter limiter_;
  mutable std::mutex mu_;
  std::size_t dimension_;
};

// POSTs `body` to endpoint + path with retries and exponential backoff on
// transport failures, 429 and 5xx. Throws TransportError.
nlohmann::json post_json(const RemoteConfig& cfg, InflightLimiter& limiter, const std::string& path,
                         const nlohmann::json& body);

// --- Gateway -----------------------------------------------------------------

struct ClassificationRequest {
  std::string sentence;
};

struct ClassificationResult {
  std::set<TermKind> labels;  // empty: the sentence is legally irrelevant
};

struct TermExample {
  std::string license_id;
  std::string clause;
  TermValue value;
};

struct ValuationRequest {
  TermKind kind;
  std::string clause_text;
  std::vector<TermExample> examples;
};

struct ValuationResult {
  TermValue value;
  std::string rationale;
};

enum class ComponentKind { kPrimaryLicense, kThirdPartyLicense, kNotice, kReference };
std::string_view to_string(ComponentKind kind);
std::optional<ComponentKind> component_kind_from_string(std::string_view s);

struct LicenseComponent {
  ComponentKind kind;
  std::string text;
  friend bool operator==(const LicenseComponent&, const LicenseComponent&) = default;
};

// Parsers for the fenced `KEY: value` reply format. Each throws ProtocolError
// with a message suitable for a re-ask.
std::set<TermKind> parse_labels_reply(std::string_view reply);
ValuationResult parse_value_reply(TermKind kind, std::string_view reply);
// Line ranges are 1-based and inclusive; they must partition [1, line_count].
std::vector<std::pair<ComponentKind, std::pair<std::size_t, std::size_t>>> parse_segment_reply(
    std::string_view reply, std::size_t line_count);

// Renders prompts, talks to the backends, validates replies and re-asks up
// to twice. Never returns an out-of-domain value.
class ModelGateway {
 public:
  static constexpr int kMaxReasks = 2;

  ModelGateway(std::shared_ptr<ReasoningBackend> reasoning, std::shared_ptr<EmbeddingBackend> embedding);

  EmbeddingBackend& embedder() const { return *embedding_; }
  ReasoningBackend& reasoner() const { return *reasoning_; }

  Embedding embed(std::string_view text) const { return embedding_->embed(text); }

  // Throw ProtocolError after the re-asks are exhausted and TransportError
  // when the service is unreachable. When `meter` is given it is incremented
  // once per backend request, re-asks included.
  ClassificationResult classify_sentence(const ClassificationRequest& req, std::uint64_t* meter = nullptr) const;
  ValuationResult value_term(const ValuationRequest& req, std::uint64_t* meter = nullptr) const;
  // Components partition the text in order. A protocol failure yields one
  // primary-license component.
  std::vector<LicenseComponent> segment_license_file(std::string_view text, std::uint64_t* meter = nullptr) const;

  std::uint64_t calls() const { return reasoning_->calls(); }

 private:
  template <typename Parse>
  auto ask(ModelTask task, const std::string& prompt, const nlohmann::json& payload, Parse parse,
           std::uint64_t* meter) const;

  std::shared_ptr<ReasoningBackend> reasoning_;
  std::shared_ptr<EmbeddingBackend> embedding_;
};

// Term definitions shipped with the prompts, keyed by kind.
std::string_view term_definition(TermKind kind);
std::string domain_description(TermKind kind);

std::string_view prompt_template(std::string_view name);
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string_view, std::string>>& vars);

}  // namespace licvar
