#include "fpaforge/error.hpp"

namespace fpaforge {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::MalformedLength: return "MalformedLength";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::UnsupportedQoS: return "UnsupportedQoS";
    case ErrorCode::WildcardInTopic: return "WildcardInTopic";
    case ErrorCode::LeadingDollar: return "LeadingDollar";
    case ErrorCode::TooLong: return "TooLong";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::InvalidUtf8: return "InvalidUtf8";
    case ErrorCode::EncodeError: return "EncodeError";
    case ErrorCode::Incomplete: return "Incomplete";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::MssExceeded: return "MssExceeded";
    case ErrorCode::NotEstablished: return "NotEstablished";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::ConnectRefused: return "ConnectRefused";
    case ErrorCode::ConnackNonZero: return "ConnackNonZero";
    case ErrorCode::PubackTimeout: return "PubackTimeout";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace fpaforge
