#pragma once

#include <stdexcept>
#include <string>

namespace claimaudit {

enum class ErrorCode {
  // ingestion
  MissingColumn,
  BadRating,
  BadValue,
  DanglingReference,
  DuplicateId,
  NoGoldAnnotations,
  // prompt kit
  MissingGender,
  UnknownVariant,
  ParseFailure,
  // collector
  ProviderUnreachable,
  RateLimited,
  CoverageGap,
  // stats engine
  DegenerateGroup,
  MissingCell,
  EmptyTopic,
  BudgetExceeded,
  // cli / plumbing
  IoError,
  ConfigError,
  LockHeld,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-checkable error code alongside the message.
class AuditError : public std::runtime_error {
 public:
  AuditError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace claimaudit
