#include "macf/methods.hpp"

#include "macf/errors.hpp"

namespace macf {

bool is_macf_method(const std::string& name) {
  return name == "macf" || name == "macf_user" || name == "macf_item";
}

Method make_method(const std::string& name, const Catalog& catalog, const VectorIndex& index,
                   EmbeddingProvider& provider, OrchestratorConfig config,
                   ChatConfig chat_config) {
  if (is_macf_method(name)) {
    if (name == "macf_user") config.mode = DiscussionMode::user_only;
    if (name == "macf_item") config.mode = DiscussionMode::item_only;
    return [&catalog, &index, &provider, config, chat_config](const QueryCase& query_case) {
      ToolSet tools(catalog, index, provider, {config.n, config.k});
      ScriptedPolicy scripted(config.seed);
      ChatClient chat(chat_config);
      ChatAgentPolicy chat_policy(chat, config.transcript_char_budget);
      const bool use_chat = config.policy == PolicyKind::chat;
      AgentPolicy& policy = use_chat ? static_cast<AgentPolicy&>(chat_policy) : scripted;
      Orchestrator orchestrator(config, policy, use_chat ? &chat : nullptr);
      SessionResult result = orchestrator.run(tools, query_case.user_id, query_case.query);
      return MethodOutcome{result.final_list.item_ids(), result.rounds_used, tools.call_count()};
    };
  }
  if (name == "itemcf" || name == "usercf") {
    const bool item_based = name == "itemcf";
    auto cooc = std::make_shared<CoocMatrix>(item_based ? CoocMatrix::build(catalog) : CoocMatrix{});
    return [&catalog, &index, &provider, config, cooc, item_based](const QueryCase& query_case) {
      auto scores = item_based ? item_cf_scores(*cooc, catalog, query_case.user_id)
                               : user_cf_scores(catalog, query_case.user_id);
      RankedList ranked = rerank_by_query(scores, query_case.query, index, provider, config.K);
      return MethodOutcome{ranked.item_ids(), 0, 0};
    };
  }
  if (name == "bm25") {
    return [&catalog, &index, &provider, config](const QueryCase& query_case) {
      ToolSet tools(catalog, index, provider, {config.n, config.k});
      const auto history = history_item_set(get_history(catalog, query_case.user_id));
      auto hits = tools.bm25_search(query_case.query,
                                    config.K + static_cast<int>(history.size()), {"harness", -1});
      MethodOutcome outcome;
      for (const ScoredItem& hit : hits) {
        if (history.count(hit.item_id)) continue;
        outcome.ranked_ids.push_back(hit.item_id);
        if (outcome.ranked_ids.size() == static_cast<std::size_t>(config.K)) break;
      }
      return outcome;
    };
  }
  if (name == "dense") {
    return [&catalog, &index, &provider, config](const QueryCase& query_case) {
      const auto history = history_item_set(get_history(catalog, query_case.user_id));
      const Vector query_vec = embed_text(provider, query_case.query);
      MethodOutcome outcome;
      for (const ScoredItem& hit : top_k(index, query_vec, config.K, history)) {
        outcome.ranked_ids.push_back(hit.item_id);
      }
      return outcome;
    };
  }
  throw Error(ErrorCode::MalformedRecord, "unknown method '" + name + "'");
}

}  // namespace macf
