#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srifn {

enum class ErrorKind {
  FileNotFound,
  ParseError,
  NonPositivePrice,
  InsufficientHistory,
  TooFewObservations,
  ZeroVariance,
  MissingData,
  TooFewAssets,
  NonSymmetricInput,
  SubsetTooSmall,
  EmptySelection,
  CountExceedsUniverse,
  MissingCentrality,
  NegativeWeight,
  InvalidConfig,
  InfeasibleCorrelation,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported through this type. `subject` names the
// offending asset, field or file location when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string subject = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorKind kind_;
  std::string subject_;
};

}  // namespace srifn
