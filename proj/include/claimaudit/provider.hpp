#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "claimaudit/types.hpp"

namespace claimaudit {

struct ProviderConfig {
  std::string kind = "mock";  // mock | http
  std::string endpoint;       // scheme://host[:port], http provider only
  std::string path = "/v1/chat/completions";
  std::string model = "mock-model";
  double temperature = 0.0;
  int timeout_seconds = 30;
  int max_retries = 2;
  double requests_per_minute = 60.0;
  std::string api_key_env = "CLAIMAUDIT_API_KEY";
  std::string mock_script;  // scripted response file, mock provider only
};

/// Which planned slot a request belongs to; the mock provider scripts its
/// replies off this.
struct SlotContext {
  std::string claim_id;
  Condition condition = Condition::Base;
  int prompt_variant = 1;
  int attempt = 1;  // 1-based
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const SlotContext& slot, const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic provider replaying a scripted response table keyed by
/// (claim_id, condition). A key may script a sequence consumed per attempt;
/// the last entry repeats. Unknown keys fall back to the default response.
class MockProvider : public ChatProvider {
 public:
  MockProvider() = default;
  static MockProvider from_file(const std::filesystem::path& path);

  void set_default_response(std::string text) { default_response_ = std::move(text); }
  void add_response(const std::string& claim_id, Condition condition,
                    std::vector<std::string> sequence);

  std::string complete(const SlotContext& slot, const std::string& prompt) override;
  std::string name() const override { return "mock"; }

 private:
  std::map<std::string, std::vector<std::string>> responses_;
  std::string default_response_ = "3";
};

/// Always throws ProviderUnreachable; used for cache-only replays.
class NullProvider : public ChatProvider {
 public:
  std::string complete(const SlotContext& slot, const std::string& prompt) override;
  std::string name() const override { return "null"; }
};

/// Client-side token bucket, refilled continuously at the configured
/// requests/minute.
class TokenBucket {
 public:
  explicit TokenBucket(double per_minute);
  void acquire();

 private:
  double per_second_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

/// Chat-completion HTTP provider (OpenAI-style request/response bodies).
/// The API key is read from the environment variable named in the config.
class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(const ProviderConfig& config);

  std::string complete(const SlotContext& slot, const std::string& prompt) override;
  std::string name() const override { return "http:" + config_.model; }

 private:
  ProviderConfig config_;
  TokenBucket bucket_;
};

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config);

}  // namespace claimaudit
