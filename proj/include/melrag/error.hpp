#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace melrag {

enum class ErrorCode {
  // case validation
  EmptyId,
  InvalidAge,
  InvalidSex,
  InvalidSite,
  InvalidImageRef,
  InvalidLabel,
  DuplicateId,
  ParseError,
  // persistence
  IoFailure,
  InvariantViolation,
  BadMagic,
  UnsupportedVersion,
  InvalidHeader,
  TruncatedPayload,
  TrailingBytes,
  NonFiniteValue,
  // retrieval / prompting
  DimensionMismatch,
  NeighborCountMismatch,
  // backend
  InvalidConfig,
  BackendUnavailable,
  Timeout,
  // evaluation
  EmptyDataset,
  UnknownCaseId,
  EmptyCounts,
  IdSetMismatch,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // The message without the "Code: " prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace melrag
