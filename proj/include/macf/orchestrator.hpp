#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "macf/agent.hpp"
#include "macf/catalog.hpp"
#include "macf/chat.hpp"
#include "macf/events.hpp"
#include "macf/ranked.hpp"
#include "macf/tools.hpp"

namespace macf {

enum class DiscussionMode { full, user_only, item_only };
enum class PolicyKind { scripted, chat };

const char* mode_name(DiscussionMode mode);
const char* policy_name(PolicyKind kind);

struct AblationFlags {
  bool disable_pci = false;  // identical generic instructions for everyone
  bool disable_dar = false;  // no recruitment filter, full agent set every round
  bool disable_atu = false;  // tools only once per agent, at round 0
};

struct OrchestratorConfig {
  int n = 5;
  int k = 15;
  int K = 10;
  int T_max = 5;
  double tau = 0.35;  // relevance floor for recruitment and the sufficiency test
  AblationFlags ablations;
  DiscussionMode mode = DiscussionMode::full;
  PolicyKind policy = PolicyKind::scripted;
  std::uint64_t seed = 0;
  int max_tool_calls_per_turn = 2;
  int history_window = 0;  // 0 = full history in profiles
  std::size_t transcript_char_budget = 6000;

  nlohmann::json to_json() const;
};

struct Reason {
  std::string code;  // count_shortfall | low_relevance | unsupported | unresolved_contest | ordering
  std::vector<std::string> items;

  nlohmann::json to_json() const;
};

struct Decision {
  bool sufficient = false;
  std::vector<Reason> reasons;

  nlohmann::json to_json() const;
};

struct CritiqueRecord {
  std::string item_id;
  Stance stance = Stance::support;
  std::string agent_id;
  int seq = 0;  // global turn order
};

struct DiscussionState {
  std::string session_id;
  std::string target_user;
  std::string query;
  int round = 0;
  std::vector<AgentProfile> agents;
  std::vector<std::string> active;  // agent ids, recruit order
  std::map<std::string, std::vector<CandidateSuggestion>> pool;  // append-only
  std::vector<SessionEvent> transcript;
  RankedList draft;
  bool terminated = false;
  std::string termination_reason;  // "sufficient" | "round_limit"

  // Session bookkeeping (derivable from the transcript; kept for O(1) access).
  Vector query_vec;
  std::set<std::string> target_history;
  std::vector<CritiqueRecord> critiques;
  std::map<std::string, int> last_support_seq;  // suggestions and support critiques
  std::map<std::string, int> last_contest_seq;
  std::map<std::string, std::vector<std::string>> prior_suggestions;  // agent -> items
  std::vector<std::string> messages;  // "agent@round: text"
  std::set<std::string> exhausted;    // agents whose last turn added no new pool item
  Decision last_decision;
  int turn_seq = 0;
  int event_seq = 0;

  const AgentProfile* find_agent(const std::string& agent_id) const;
};

struct SessionResult {
  RankedList final_list;
  DiscussionState state;
  int rounds_used = 0;
};

// Runs the recruit / instruct / discuss / draft / test loop. One instance is
// reusable across sessions; all per-session state lives in DiscussionState.
class Orchestrator {
 public:
  Orchestrator(OrchestratorConfig config, AgentPolicy& policy, ChatClient* chat = nullptr);

  SessionResult run(ToolSet& tools, const std::string& target_user, const std::string& query,
                    std::string session_id = "", const EventSink& sink = {}) const;

  std::vector<AgentProfile> recruit_agents(ToolSet& tools, const std::string& target_user,
                                           const std::string& query,
                                           const Vector& query_vec) const;
  std::vector<Instruction> make_instructions(const DiscussionState& state) const;
  RankedList draft_ranked_list(const DiscussionState& state, const Catalog& catalog) const;
  Decision sufficiency_test(const DiscussionState& state, const RankedList& draft,
                            const VectorIndex& index) const;
  std::vector<std::string> select_active_agents(const DiscussionState& state,
                                                const std::vector<Reason>& reasons) const;

  const OrchestratorConfig& config() const { return config_; }

  static std::string derive_session_id(const std::string& target_user, const std::string& query,
                                       std::uint64_t seed);

 private:
  DiscussionView make_view(const DiscussionState& state) const;
  TurnBudget budget_for_round(int round) const;
  void emit(DiscussionState& state, const EventSink& sink, EventType type, int round,
            nlohmann::json payload) const;
  void merge_turn(DiscussionState& state, const AgentTurn& turn) const;
  int collect_turns(DiscussionState& state, const std::vector<Instruction>& instructions,
                    ToolSet& tools, const EventSink& sink) const;
  RankedList chat_draft(const DiscussionState& state, const Catalog& catalog) const;
  Decision chat_sufficiency(const DiscussionState& state, const RankedList& draft) const;

  OrchestratorConfig config_;
  AgentPolicy& policy_;
  ChatClient* chat_;
};

}  // namespace macf
