#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "macf/catalog.hpp"
#include "macf/chat.hpp"
#include "macf/ranked.hpp"
#include "macf/tools.hpp"

namespace macf {

enum class AgentRole { user_agent, item_agent, orchestrator };
enum class Directive { propose, refine, resolve_conflict, replace_low_relevance };
enum class Stance { support, contest };

const char* role_name(AgentRole role);
const char* directive_name(Directive directive);
const char* stance_name(Stance stance);

inline constexpr std::size_t kProfileTextBudget = 1200;

struct AgentProfile {
  std::string agent_id;
  AgentRole role = AgentRole::user_agent;
  std::string subject_id;    // neighbor user_id or anchor item_id
  std::string profile_text;  // <= kProfileTextBudget bytes
  nlohmann::json evidence;   // structured digest behind profile_text
};

struct CandidateSuggestion {
  std::string item_id;
  std::string rationale;
  double confidence = 0.0;  // [0,1]
  std::string proposer;
  int round = 0;
};

struct Critique {
  std::string item_id;
  Stance stance = Stance::support;
  std::string reason;
};

struct AgentTurn {
  std::string agent_id;
  int round = 0;
  std::string message;
  std::vector<CandidateSuggestion> suggestions;  // <= 10 per turn
  std::vector<Critique> critiques;
  int tool_calls_made = 0;
  int dropped_invalid = 0;  // hallucinated ids removed by the firewall

  nlohmann::json to_json() const;
};

struct Instruction {
  std::string agent_id;
  int round = 0;
  Directive directive = Directive::propose;
  std::vector<std::string> focus_items;
  std::string guidance_text;

  nlohmann::json to_json() const;
};

// Read-only snapshot of the discussion an agent sees when taking a turn.
struct DiscussionView {
  std::string target_user;
  std::string query;
  int round = 0;
  double tau = 0.35;
  std::set<std::string> exclude_items;  // target user's history
  std::set<std::string> pool_items;     // candidate pool at round start
  RankedList draft;                     // current draft list (may be empty)
  std::map<std::string, std::vector<std::string>> prior_suggestions;  // agent -> items
  std::vector<std::string> messages;  // "agent@round: text", oldest first
};

struct TurnBudget {
  int max_tool_calls = 2;
};

class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual AgentTurn take_turn(const AgentProfile& profile, const Instruction& instruction,
                              const DiscussionView& view, ToolSet& tools,
                              const TurnBudget& budget) = 0;
  virtual std::string name() const = 0;
};

AgentProfile build_user_agent_profile(const Catalog& catalog, const VectorIndex& index,
                                      const Neighbor& neighbor, const std::string& target_user,
                                      int history_window = 0);

AgentProfile build_item_agent_profile(const Catalog& catalog, const RelevantItem& anchor,
                                      const std::string& target_user, const std::string& query);

// Runs one turn through the policy and enforces the turn contract: budget
// respected, suggestion ids resolved against the catalog (invalid ones dropped
// and counted), critiques restricted to pool/draft items, at most 10
// suggestions.
AgentTurn agent_step(const AgentProfile& profile, const Instruction& instruction,
                     const DiscussionView& view, ToolSet& tools, AgentPolicy& policy,
                     const TurnBudget& budget);

// Parses the agent-turn wire format:
//   {"message": str,
//    "suggestions": [{"item_id": str, "rationale": str, "confidence": num}],
//    "critiques":   [{"item_id": str, "stance": "support"|"contest", "reason": str}]}
// Tolerates extra fields and JSON embedded in prose; throws UnparseableTurn
// when no object can be recovered.
AgentTurn parse_agent_turn(const std::string& raw);

// Deterministic tool-driven policy. Turns are a pure function of
// (profile, instruction, view, seed) given the immutable catalog/index.
class ScriptedPolicy : public AgentPolicy {
 public:
  explicit ScriptedPolicy(std::uint64_t seed = 0) : seed_(seed) {}
  AgentTurn take_turn(const AgentProfile& profile, const Instruction& instruction,
                      const DiscussionView& view, ToolSet& tools,
                      const TurnBudget& budget) override;
  std::string name() const override { return "scripted"; }

 private:
  std::uint64_t seed_;
};

// Chat-completion-backed policy. Retrieval context is gathered with the same
// directive heuristics as the scripted policy (within budget) and injected
// into the prompt; the reply must use the wire format above, with one repair
// re-prompt on parse failure.
class ChatAgentPolicy : public AgentPolicy {
 public:
  ChatAgentPolicy(ChatClient& client, std::size_t transcript_char_budget = 6000)
      : client_(client), transcript_char_budget_(transcript_char_budget) {}
  AgentTurn take_turn(const AgentProfile& profile, const Instruction& instruction,
                      const DiscussionView& view, ToolSet& tools,
                      const TurnBudget& budget) override;
  std::string name() const override { return "chat"; }

 private:
  ChatClient& client_;
  std::size_t transcript_char_budget_;
};

// Shared by the chat policy and the chat orchestrator ops. Truncates oldest
// messages first; the current draft and the newest messages always survive.
std::string build_transcript_digest(const DiscussionView& view, std::size_t char_budget);

}  // namespace macf
