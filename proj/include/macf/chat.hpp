#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "macf/embedding.hpp"  // HttpResult

namespace macf {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatParams {
  double temperature = 0.3;
  int max_tokens = 0;  // 0 = provider default
};

struct ChatConfig {
  std::string base_url = "http://127.0.0.1:8090";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.3;
  int timeout_s = 30;
  int max_retries = 3;
  int backoff_base_ms = 200;
  std::size_t context_char_budget = 48000;
  std::string api_key_env = "CHAT_API_KEY";
};

struct ChatCompletion {
  std::string text;
  int retries_used = 0;
};

// De-facto chat-completions schema over an injectable transport. The default
// transport POSTs {"model", "messages", "temperature"} and reads the first
// choice's message content.
class ChatClient {
 public:
  using Transport = std::function<HttpResult(const nlohmann::json& request)>;

  explicit ChatClient(ChatConfig config, Transport transport = {});

  ChatCompletion complete(const std::vector<ChatMessage>& messages, const ChatParams& params = {});

  const ChatConfig& config() const { return config_; }

 private:
  ChatConfig config_;
  Transport transport_;
};

std::string chat_complete(ChatClient& client, const std::vector<ChatMessage>& messages,
                          const ChatParams& params = {});

}  // namespace macf
