#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hrep {

enum class ErrorCode {
  MissingKey,
  DuplicateKey,
  UnknownKey,
  UnknownColumn,
  TypeMismatch,
  EmptyDataset,
  InvalidSchema,
  InvalidLayout,
  DuplicateFilter,
  EmptyRange,
  CorruptTable,
  IoFailure,
  StatsMissing,
  InsufficientSamples,
  InvalidModel,
  ModelMissing,
  EmptyWorkload,
  DivisionByZero,
  DegenerateSchema,
  SearchSpaceTooLarge,
  InvalidArgument,
  StoreClosed,
  NoSurvivingReplica,
  InsufficientStats,
  ManifestMismatch,
  StoreMissing,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::DuplicateFilter: return "DuplicateFilter";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::CorruptTable: return "CorruptTable";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::StatsMissing: return "StatsMissing";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::ModelMissing: return "ModelMissing";
    case ErrorCode::EmptyWorkload: return "EmptyWorkload";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::DegenerateSchema: return "DegenerateSchema";
    case ErrorCode::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::StoreClosed: return "StoreClosed";
    case ErrorCode::NoSurvivingReplica: return "NoSurvivingReplica";
    case ErrorCode::InsufficientStats: return "InsufficientStats";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::StoreMissing: return "StoreMissing";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as an Error carrying a code and,
/// where one exists, the offending column name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string column = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        column_(std::move(column)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::string column_;
};

}  // namespace hrep
