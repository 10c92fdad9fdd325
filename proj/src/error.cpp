#include "srifn/error.hpp"

namespace srifn {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonPositivePrice: return "NonPositivePrice";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::TooFewObservations: return "TooFewObservations";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::MissingData: return "MissingData";
    case ErrorKind::TooFewAssets: return "TooFewAssets";
    case ErrorKind::NonSymmetricInput: return "NonSymmetricInput";
    case ErrorKind::SubsetTooSmall: return "SubsetTooSmall";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::CountExceedsUniverse: return "CountExceedsUniverse";
    case ErrorKind::MissingCentrality: return "MissingCentrality";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InfeasibleCorrelation: return "InfeasibleCorrelation";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::string subject)
    : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}

}  // namespace srifn
