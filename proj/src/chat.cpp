#include "macf/chat.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "macf/errors.hpp"
#include "macf/net_probe.hpp"

namespace macf {

ChatClient::ChatClient(ChatConfig config, Transport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) {
    transport_ = [this](const nlohmann::json& request) -> HttpResult {
      net::provider_request_count().fetch_add(1);
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout_s);
      client.set_read_timeout(config_.timeout_s);
      httplib::Headers headers;
      if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
      auto res = client.Post(config_.path, headers, request.dump(), "application/json");
      if (!res) {
        throw Error(ErrorCode::BackendUnavailable, "transport error: " + httplib::to_string(res.error()));
      }
      return HttpResult{res->status, res->body};
    };
  }
}

ChatCompletion ChatClient::complete(const std::vector<ChatMessage>& messages,
                                    const ChatParams& params) {
  if (messages.empty()) {
    throw Error(ErrorCode::BackendUnavailable, "no messages to send");
  }
  std::size_t total_chars = 0;
  nlohmann::json message_list = nlohmann::json::array();
  for (const ChatMessage& message : messages) {
    total_chars += message.content.size();
    message_list.push_back({{"role", message.role}, {"content", message.content}});
  }
  // Local guard: refuse before any network call so callers can truncate.
  if (total_chars > config_.context_char_budget) {
    throw Error(ErrorCode::ContextTooLong,
                std::to_string(total_chars) + " chars exceeds budget " +
                    std::to_string(config_.context_char_budget));
  }
  nlohmann::json request{{"model", config_.model},
                         {"messages", std::move(message_list)},
                         {"temperature", params.temperature}};
  if (params.max_tokens > 0) request["max_tokens"] = params.max_tokens;

  ChatCompletion out;
  for (int attempt = 0;; ++attempt) {
    bool retryable = true;
    std::string failure;
    try {
      HttpResult result = transport_(request);
      if (result.status == 200) {
        nlohmann::json payload = nlohmann::json::parse(result.body, nullptr, false);
        if (!payload.is_discarded() && payload.contains("choices") &&
            payload["choices"].is_array() && !payload["choices"].empty()) {
          const auto& choice = payload["choices"][0];
          if (choice.contains("message") && choice["message"].contains("content")) {
            out.text = choice["message"]["content"].get<std::string>();
            out.retries_used = attempt;
            return out;
          }
        }
        failure = "malformed completion response";
        retryable = false;
      } else {
        retryable = result.status == 429 || result.status >= 500;
        failure = "status " + std::to_string(result.status);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendUnavailable) throw;
      failure = e.what();
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (!retryable || attempt >= config_.max_retries) {
      throw Error(ErrorCode::BackendUnavailable,
                  failure + " after " + std::to_string(attempt) + " retries");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_base_ms << attempt));
  }
}

std::string chat_complete(ChatClient& client, const std::vector<ChatMessage>& messages,
                          const ChatParams& params) {
  return client.complete(messages, params).text;
}

}  // namespace macf
