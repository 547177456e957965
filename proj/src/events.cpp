#include "macf/events.hpp"

#include "macf/errors.hpp"

namespace macf {

const char* event_type_name(EventType type) {
  switch (type) {
    case EventType::session_started: return "session_started";
    case EventType::round_started: return "round_started";
    case EventType::instruction: return "instruction";
    case EventType::agent_turn: return "agent_turn";
    case EventType::draft_list: return "draft_list";
    case EventType::decision: return "decision";
    case EventType::final_list: return "final_list";
    case EventType::session_failed: return "session_failed";
  }
  return "session_failed";
}

EventType parse_event_type(const std::string& name) {
  for (EventType type : {EventType::session_started, EventType::round_started,
                         EventType::instruction, EventType::agent_turn, EventType::draft_list,
                         EventType::decision, EventType::final_list, EventType::session_failed}) {
    if (name == event_type_name(type)) return type;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown event type '" + name + "'");
}

nlohmann::json SessionEvent::to_json() const {
  return {{"type", event_type_name(type)},
          {"round", round},
          {"seq", seq},
          {"session_id", session_id},
          {"payload", payload}};
}

SessionEvent SessionEvent::from_json(const nlohmann::json& record) {
  SessionEvent event;
  event.type = parse_event_type(record.at("type").get<std::string>());
  event.round = record.at("round").get<int>();
  event.seq = record.at("seq").get<int>();
  event.session_id = record.at("session_id").get<std::string>();
  event.payload = record.value("payload", nlohmann::json::object());
  return event;
}

}  // namespace macf
