#include "melrag/error.hpp"

namespace melrag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyId: return "EmptyId";
    case ErrorCode::InvalidAge: return "InvalidAge";
    case ErrorCode::InvalidSex: return "InvalidSex";
    case ErrorCode::InvalidSite: return "InvalidSite";
    case ErrorCode::InvalidImageRef: return "InvalidImageRef";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::InvalidHeader: return "InvalidHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NeighborCountMismatch: return "NeighborCountMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownCaseId: return "UnknownCaseId";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::IdSetMismatch: return "IdSetMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace melrag
