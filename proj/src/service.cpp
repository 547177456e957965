#include "macf/service.hpp"

#include <chrono>
#include <fstream>

#include <httplib.h>

#include "macf/baselines.hpp"
#include "macf/errors.hpp"
#include "macf/jsonl.hpp"
#include "macf/text.hpp"

namespace macf {

namespace {

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownUser:
    case ErrorCode::UnknownItem:
    case ErrorCode::UnknownRelevantItem:
      return 404;
    case ErrorCode::EmptyText:
    case ErrorCode::MalformedRecord:
      return 400;
    case ErrorCode::EmptyHistory:
    case ErrorCode::ZeroVector:
    case ErrorCode::DimMismatch:
      return 422;
    default:
      return 500;
  }
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& detail) {
  res.status = http_status_for(code);
  res.set_content(nlohmann::json{{"error", code_name(code)}, {"detail", detail}}.dump(),
                  "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
  nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::MalformedRecord, "request body must be a JSON object");
  }
  return body;
}

std::string required_string(const nlohmann::json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw Error(ErrorCode::MalformedRecord, std::string("missing string field \"") + key + "\"");
  }
  return body.at(key).get<std::string>();
}

nlohmann::json scored_to_json(const std::vector<ScoredItem>& items) {
  nlohmann::json list = nlohmann::json::array();
  for (const ScoredItem& item : items) {
    list.push_back({{"item_id", item.item_id}, {"score", item.score}});
  }
  return list;
}

}  // namespace

Service::Service(ServiceConfig service_config, const Catalog& catalog, const VectorIndex& index,
                 EmbeddingProvider& provider, OrchestratorConfig orchestrator_config,
                 ChatConfig chat_config)
    : service_config_(std::move(service_config)),
      catalog_(catalog),
      index_(index),
      provider_(provider),
      orchestrator_config_(std::move(orchestrator_config)),
      chat_config_(std::move(chat_config)),
      server_(std::make_unique<httplib::Server>()) {
  server_->new_task_queue = [this] { return new httplib::ThreadPool(service_config_.threads); };
  server_->set_write_timeout(service_config_.write_timeout_s, 0);
  setup_routes();
}

Service::~Service() {
  stop();
}

bool Service::running() const {
  return server_ && server_->is_running();
}

void Service::start() {
  if (index_.entries.empty()) {
    throw Error(ErrorCode::MissingIndex, "vector index is empty; run ingest/index first");
  }
  if (service_config_.port == 0) {
    port_ = server_->bind_to_any_port(service_config_.host);
    if (port_ <= 0) {
      throw Error(ErrorCode::BindFailure, "cannot bind to any port on " + service_config_.host);
    }
  } else {
    if (!server_->bind_to_port(service_config_.host, service_config_.port)) {
      throw Error(ErrorCode::BindFailure, service_config_.host + ":" +
                                              std::to_string(service_config_.port) +
                                              " is unavailable");
    }
    port_ = service_config_.port;
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Service::stop() {
  if (!server_) return;
  server_->stop();
  // Drain in-flight sessions up to the deadline.
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::seconds(service_config_.drain_timeout_s);
  while (in_flight_.load() > 0 && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (listener_.joinable()) listener_.join();
}

void Service::setup_routes() {
  server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"status", "ok"},
                                   {"items", catalog_.items.size()},
                                   {"users", catalog_.users.size()}}
                        .dump(),
                    "application/json");
  });

  server_->Post("/recommend", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    std::string user_id, query;
    OrchestratorConfig session_config = orchestrator_config_;
    try {
      body = parse_body(req);
      user_id = required_string(body, "user_id");
      query = required_string(body, "query");
      if (body.contains("config_overrides")) {
        apply_overrides(session_config, body.at("config_overrides"));
      }
      // Validate up front so errors arrive as plain JSON before any stream.
      if (!catalog_.has_user(user_id)) {
        throw Error(ErrorCode::UnknownUser, "no user '" + user_id + "' in catalog");
      }
      if (get_history(catalog_, user_id).events.empty()) {
        throw Error(ErrorCode::EmptyHistory, "user '" + user_id + "' has an empty history");
      }
      if (trim(query).empty()) {
        throw Error(ErrorCode::EmptyText, "query is empty");
      }
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
      return;
    }

    const std::string session_id =
        Orchestrator::derive_session_id(user_id, query, session_config.seed) + "-" +
        std::to_string(session_counter_.fetch_add(1));
    res.set_header("X-Session-Id", session_id);
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [this, session_config, user_id, query, session_id](std::size_t, httplib::DataSink& sink) {
          in_flight_.fetch_add(1);
          std::vector<SessionEvent> events;
          auto stream_event = [&](const SessionEvent& event) {
            events.push_back(event);
            const std::string line = event.to_json().dump() + "\n";
            if (!sink.write(line.data(), line.size())) {
              throw Error(ErrorCode::SessionFailure, "client stopped reading the stream");
            }
          };
          try {
            ToolSet tools(catalog_, index_, provider_,
                          {session_config.n, session_config.k});
            ScriptedPolicy scripted(session_config.seed);
            ChatClient chat(chat_config_);
            ChatAgentPolicy chat_policy(chat, session_config.transcript_char_budget);
            const bool use_chat = session_config.policy == PolicyKind::chat;
            AgentPolicy& policy =
                use_chat ? static_cast<AgentPolicy&>(chat_policy) : scripted;
            Orchestrator orchestrator(session_config, policy, use_chat ? &chat : nullptr);
            orchestrator.run(tools, user_id, query, session_id, stream_event);
          } catch (const std::exception& e) {
            const bool has_terminal =
                !events.empty() && (events.back().type == EventType::final_list ||
                                    events.back().type == EventType::session_failed);
            if (!has_terminal) {
              SessionEvent failed;
              failed.type = EventType::session_failed;
              failed.round = events.empty() ? 0 : events.back().round;
              failed.seq = static_cast<int>(events.size());
              failed.session_id = session_id;
              failed.payload = {{"error", e.what()}};
              try {
                stream_event(failed);
              } catch (const Error&) {
                events.push_back(failed);  // client gone; keep it for the transcript
              }
            }
          }
          if (!service_config_.transcript_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(service_config_.transcript_dir, ec);
            std::ofstream out(service_config_.transcript_dir / (session_id + ".jsonl"));
            for (const SessionEvent& event : events) write_jsonl_line(out, event.to_json());
          }
          sink.done();
          in_flight_.fetch_sub(1);
          return true;
        });
  });

  server_->Post("/tools/similar_users", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const nlohmann::json body = parse_body(req);
      ToolSet tools(catalog_, index_, provider_, {orchestrator_config_.n, orchestrator_config_.k});
      const int n = body.contains("n") ? clamp_override(body.at("n").get<int>())
                                       : orchestrator_config_.n;
      NeighborSet neighbors =
          tools.get_similar_users(required_string(body, "user_id"), n, {"remote", -1});
      nlohmann::json list = nlohmann::json::array();
      for (const Neighbor& neighbor : neighbors.neighbors) {
        list.push_back({{"user_id", neighbor.user_id}, {"similarity", neighbor.similarity}});
      }
      res.set_content(nlohmann::json{{"neighbors", list}}.dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    }
  });

  server_->Post("/tools/relevant_items", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const nlohmann::json body = parse_body(req);
      ToolSet tools(catalog_, index_, provider_, {orchestrator_config_.n, orchestrator_config_.k});
      const int n = body.contains("n") ? clamp_override(body.at("n").get<int>())
                                       : orchestrator_config_.n;
      RelevantHistory relevant = tools.get_relevant_items(
          required_string(body, "user_id"), required_string(body, "query"), n, {"remote", -1});
      nlohmann::json list = nlohmann::json::array();
      for (const RelevantItem& item : relevant.items) {
        list.push_back({{"item_id", item.item_id},
                        {"relevance", item.relevance},
                        {"last_timestamp", item.last_timestamp}});
      }
      res.set_content(nlohmann::json{{"items", list}}.dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    }
  });

  server_->Post("/tools/by_query", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const nlohmann::json body = parse_body(req);
      ToolSet tools(catalog_, index_, provider_, {orchestrator_config_.n, orchestrator_config_.k});
      const int k = body.contains("k") ? clamp_override(body.at("k").get<int>())
                                       : orchestrator_config_.k;
      std::set<std::string> exclude;
      if (body.contains("exclude") && body.at("exclude").is_array()) {
        for (const auto& entry : body.at("exclude")) {
          if (entry.is_string()) exclude.insert(entry.get<std::string>());
        }
      }
      auto results =
          tools.retrieve_by_query(required_string(body, "query"), k, exclude, {"remote", -1});
      res.set_content(nlohmann::json{{"results", scored_to_json(results)}}.dump(),
                      "application/json");
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    }
  });

  server_->Post("/tools/by_item", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const nlohmann::json body = parse_body(req);
      ToolSet tools(catalog_, index_, provider_, {orchestrator_config_.n, orchestrator_config_.k});
      const int k = body.contains("k") ? clamp_override(body.at("k").get<int>())
                                       : orchestrator_config_.k;
      auto results = tools.retrieve_by_item(required_string(body, "item_id"), k, {"remote", -1});
      res.set_content(nlohmann::json{{"results", scored_to_json(results)}}.dump(),
                      "application/json");
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    }
  });

  server_->Post(R"(/baseline/(itemcf|usercf|bm25|dense))",
                [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string method = req.matches[1];
      const nlohmann::json body = parse_body(req);
      const std::string user_id = required_string(body, "user_id");
      const std::string query = required_string(body, "query");
      const int k = body.contains("k") ? clamp_override(body.at("k").get<int>())
                                       : orchestrator_config_.K;
      const std::set<std::string> history = history_item_set(get_history(catalog_, user_id));
      ToolSet tools(catalog_, index_, provider_, {orchestrator_config_.n, orchestrator_config_.k});

      RankedList ranked;
      if (method == "itemcf" || method == "usercf") {
        auto cf_scores = method == "itemcf" ? item_cf_scores(catalog_, user_id)
                                            : user_cf_scores(catalog_, user_id);
        ranked = rerank_by_query(cf_scores, query, index_, provider_, k);
      } else if (method == "bm25") {
        auto hits = tools.bm25_search(query, k + static_cast<int>(history.size()), {"remote", -1});
        for (const ScoredItem& hit : hits) {
          if (history.count(hit.item_id)) continue;
          ranked.entries.push_back({hit.item_id, hit.score, {}});
          if (ranked.entries.size() == static_cast<std::size_t>(k)) break;
        }
      } else {  // dense
        auto hits = tools.retrieve_by_query(query, k, history, {"remote", -1});
        for (const ScoredItem& hit : hits) ranked.entries.push_back({hit.item_id, hit.score, {}});
      }
      res.set_content(ranked.to_json(false).dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    }
  });
}

}  // namespace macf
