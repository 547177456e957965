#include "macf/errors.hpp"

namespace macf {

const char* code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateItemId: return "DuplicateItemId";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::UnknownRelevantItem: return "UnknownRelevantItem";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::EmptyRelevanceSet: return "EmptyRelevanceSet";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::MissingItemVector: return "MissingItemVector";
    case ErrorCode::ItemNotInHistory: return "ItemNotInHistory";
    case ErrorCode::PolicyFailure: return "PolicyFailure";
    case ErrorCode::UnparseableTurn: return "UnparseableTurn";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ContextTooLong: return "ContextTooLong";
    case ErrorCode::SessionFailure: return "SessionFailure";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::MissingIndex: return "MissingIndex";
    case ErrorCode::MissingCatalog: return "MissingCatalog";
  }
  return "Error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(code_name(code)) + ": " + message), code_(code) {}

}  // namespace macf
