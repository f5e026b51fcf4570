#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include "licvar/errors.hpp"
#include "licvar/model_gateway.hpp"

namespace licvar {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw BackendError("endpoint must be an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

void apply_env(RemoteConfig& cfg) {
  if (auto v = env("LICVAR_ENDPOINT")) cfg.endpoint = *v;
  if (auto v = env("LICVAR_MODEL")) cfg.model = *v;
  if (auto v = env("LICVAR_API_KEY")) cfg.api_key = *v;
  if (auto v = env("LICVAR_EMBEDDING_MODEL")) cfg.embedding_model = *v;
  if (auto v = env("LICVAR_MAX_INFLIGHT")) cfg.max_inflight = std::stoi(*v);
  if (auto v = env("LICVAR_TIMEOUT")) cfg.timeout = std::chrono::milliseconds(std::stol(*v) * 1000);
}

class LimiterGuard {
 public:
  explicit LimiterGuard(InflightLimiter& l) : l_(l) { l_.acquire(); }
  ~LimiterGuard() { l_.release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;

 private:
  InflightLimiter& l_;
};

}  // namespace

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig cfg;
  apply_env(cfg);
  return cfg;
}

RemoteConfig RemoteConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string() + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  RemoteConfig cfg;
  try {
    cfg.endpoint = j.value("endpoint", cfg.endpoint);
    cfg.model = j.value("model", cfg.model);
    cfg.api_key = j.value("api_key", cfg.api_key);
    cfg.embedding_model = j.value("embedding_model", cfg.embedding_model);
    cfg.max_inflight = j.value("max_inflight", cfg.max_inflight);
    cfg.timeout = std::chrono::milliseconds(static_cast<long>(j.value("timeout", 60.0) * 1000));
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  apply_env(cfg);
  return cfg;
}

void InflightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return available_ > 0; });
  --available_;
}

void InflightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    ++available_;
  }
  cv_.notify_one();
}

nlohmann::json post_json(const RemoteConfig& cfg, InflightLimiter& limiter, const std::string& path,
                         const nlohmann::json& body) {
  const ParsedUrl url = parse_url(cfg.endpoint);
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  auto backoff = cfg.initial_backoff;
  int last_status = 0;
  std::string last_error;
  const int attempts = std::max(1, cfg.max_retries + 1);
  int made = 0;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    ++made;
    {
      LimiterGuard guard(limiter);
      httplib::Client client(url.origin);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
      client.set_connection_timeout(secs);
      client.set_read_timeout(secs);
      client.set_write_timeout(secs);
      auto res = client.Post(url.prefix + path, headers, payload, "application/json");
      if (res) {
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) {
          try {
            return nlohmann::json::parse(res->body);
          } catch (const nlohmann::json::parse_error& e) {
            throw ProtocolError(std::string("response is not JSON: ") + e.what());
          }
        }
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status != 429 && res->status < 500) {
          throw TransportError("POST " + cfg.endpoint + path + " failed: " + last_error, made, last_status);
        }
      } else {
        last_error = httplib::to_string(res.error());
      }
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("POST " + cfg.endpoint + path + " failed: " + last_error, made, last_status);
}

RemoteReasoningBackend::RemoteReasoningBackend(RemoteConfig cfg)
    : cfg_(std::move(cfg)), limiter_(cfg_.max_inflight) {
  if (cfg_.endpoint.empty() || cfg_.model.empty()) {
    throw BackendError("remote backend needs an endpoint and a model name");
  }
}

std::string RemoteReasoningBackend::do_complete(const ChatRequest& request) {
  const nlohmann::json body = {
      {"model", cfg_.model},
      {"temperature", 0},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
  };
  const nlohmann::json reply = post_json(cfg_, limiter_, "/chat/completions", body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("unexpected chat completion shape: ") + e.what());
  }
}

RemoteEmbeddingBackend::RemoteEmbeddingBackend(RemoteConfig cfg)
    : cfg_(std::move(cfg)), limiter_(cfg_.max_inflight), dimension_(cfg_.embedding_dimension) {
  if (cfg_.endpoint.empty() || cfg_.embedding_model.empty()) {
    throw BackendError("remote embedding backend needs an endpoint and an embedding model name");
  }
}

std::size_t RemoteEmbeddingBackend::dimension() const {
  std::lock_guard lock(mu_);
  return dimension_;
}

Embedding RemoteEmbeddingBackend::embed(std::string_view text) {
  const nlohmann::json body = {{"model", cfg_.embedding_model}, {"input", std::string(text)}};
  const nlohmann::json reply = post_json(cfg_, limiter_, "/embeddings", body);
  Embedding out;
  try {
    out = reply.at("data").at(0).at("embedding").get<Embedding>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("unexpected embedding response shape: ") + e.what());
  }
  std::lock_guard lock(mu_);
  if (dimension_ == 0) dimension_ = out.size();
  if (out.size() != dimension_) throw BackendError("embedding service changed dimension");
  return out;
}

}  // namespace licvar
