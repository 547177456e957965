#pragma once

#include <stdexcept>
#include <string>

namespace macf {

enum class ErrorCode {
  MalformedRecord,
  DanglingReference,
  DuplicateItemId,
  UnknownUser,
  UnknownItem,
  UnknownRelevantItem,
  EmptyText,
  EmptyHistory,
  EmptyRelevanceSet,
  ProviderUnavailable,
  DimMismatch,
  ZeroVector,
  MissingItemVector,
  ItemNotInHistory,
  PolicyFailure,
  UnparseableTurn,
  BackendUnavailable,
  ContextTooLong,
  SessionFailure,
  BindFailure,
  MissingIndex,
  MissingCatalog,
};

const char* code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace macf
