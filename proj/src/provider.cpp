#include "claimaudit/provider.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "claimaudit/errors.hpp"

namespace claimaudit {

namespace {

std::string script_key(const std::string& claim_id, Condition condition) {
  return claim_id + "|" + to_string(condition);
}

}  // namespace

MockProvider MockProvider::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw AuditError(ErrorCode::IoError, "cannot open mock script: " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw AuditError(ErrorCode::ConfigError,
                     "bad mock script " + path.string() + ": " + e.what());
  }
  MockProvider provider;
  if (doc.contains("default")) {
    provider.default_response_ = doc["default"].get<std::string>();
  }
  if (doc.contains("responses")) {
    for (const auto& [key, value] : doc["responses"].items()) {
      std::vector<std::string> sequence;
      if (value.is_string()) {
        sequence.push_back(value.get<std::string>());
      } else {
        sequence = value.get<std::vector<std::string>>();
      }
      if (sequence.empty()) {
        throw AuditError(ErrorCode::ConfigError,
                         "mock script entry '" + key + "' has no responses");
      }
      provider.responses_[key] = std::move(sequence);
    }
  }
  return provider;
}

void MockProvider::add_response(const std::string& claim_id, Condition condition,
                                std::vector<std::string> sequence) {
  responses_[script_key(claim_id, condition)] = std::move(sequence);
}

std::string MockProvider::complete(const SlotContext& slot, const std::string& /*prompt*/) {
  auto it = responses_.find(script_key(slot.claim_id, slot.condition));
  if (it == responses_.end()) return default_response_;
  const auto& sequence = it->second;
  const std::size_t idx = std::min<std::size_t>(
      static_cast<std::size_t>(slot.attempt > 0 ? slot.attempt - 1 : 0),
      sequence.size() - 1);
  return sequence[idx];
}

std::string NullProvider::complete(const SlotContext&, const std::string&) {
  throw AuditError(ErrorCode::ProviderUnreachable,
                   "provider disabled; request not served by cache");
}

TokenBucket::TokenBucket(double per_minute)
    : per_second_(per_minute / 60.0),
      tokens_(per_minute > 0 ? 1.0 : 0.0),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  std::unique_lock<std::mutex> lock(mu_);
  if (per_second_ <= 0) return;
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    tokens_ += std::chrono::duration<double>(now - last_).count() * per_second_;
    last_ = now;
    if (tokens_ > per_second_ * 60.0) tokens_ = per_second_ * 60.0;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait_s = (1.0 - tokens_) / per_second_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    lock.lock();
  }
}

HttpChatProvider::HttpChatProvider(const ProviderConfig& config)
    : config_(config), bucket_(config.requests_per_minute) {
  if (config_.endpoint.empty()) {
    throw AuditError(ErrorCode::ConfigError, "http provider requires an endpoint");
  }
}

std::string HttpChatProvider::complete(const SlotContext& /*slot*/, const std::string& prompt) {
  nlohmann::json body = {
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config_.temperature},
  };
  const std::string payload = body.dump();

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const int attempts = config_.max_retries + 1;
  bool rate_limited = false;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200) * (1 << (attempt - 1)));
    }
    bucket_.acquire();
    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      rate_limited = false;
      continue;
    }
    if (res->status == 429) {
      last_error = "http 429";
      rate_limited = true;
      continue;
    }
    if (res->status != 200) {
      last_error = "http " + std::to_string(res->status) + ": " + res->body;
      rate_limited = false;
      continue;
    }
    try {
      nlohmann::json doc = nlohmann::json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw AuditError(ErrorCode::ProviderUnreachable,
                       std::string("malformed provider response: ") + e.what());
    }
  }
  throw AuditError(rate_limited ? ErrorCode::RateLimited : ErrorCode::ProviderUnreachable,
                   "provider " + config_.endpoint + " failed after " +
                       std::to_string(attempts) + " attempts: " + last_error);
}

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config) {
  if (config.kind == "mock") {
    if (!config.mock_script.empty()) {
      return std::make_unique<MockProvider>(MockProvider::from_file(config.mock_script));
    }
    return std::make_unique<MockProvider>();
  }
  if (config.kind == "http") {
    return std::make_unique<HttpChatProvider>(config);
  }
  if (config.kind == "null") {
    return std::make_unique<NullProvider>();
  }
  throw AuditError(ErrorCode::ConfigError, "unknown provider kind '" + config.kind + "'");
}

}  // namespace claimaudit
