#pragma once

#include <functional>
#include <string>

#include <json.hpp>

namespace macf {

enum class EventType {
  session_started,
  round_started,
  instruction,
  agent_turn,
  draft_list,
  decision,
  final_list,
  session_failed,
};

const char* event_type_name(EventType type);
EventType parse_event_type(const std::string& name);

// One transcript record. The ordered sequence of these is both the audit
// artifact on disk and the streaming wire format.
struct SessionEvent {
  EventType type = EventType::session_started;
  int round = 0;
  int seq = 0;
  std::string session_id;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static SessionEvent from_json(const nlohmann::json& record);

  bool operator==(const SessionEvent&) const = default;
};

using EventSink = std::function<void(const SessionEvent&)>;

}  // namespace macf
