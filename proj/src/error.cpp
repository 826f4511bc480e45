#include "callsynth/error.hpp"

namespace callsynth {

std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::IndexGap: return "IndexGap";
    case ErrorKind::UnknownSpeaker: return "UnknownSpeaker";
    case ErrorKind::UnknownLanguage: return "UnknownLanguage";
    case ErrorKind::InvalidAttributes: return "InvalidAttributes";
    case ErrorKind::NonPositiveDuration: return "NonPositiveDuration";
    case ErrorKind::LabelOutOfSet: return "LabelOutOfSet";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownDimension: return "UnknownDimension";
    case ErrorKind::MissingVariable: return "MissingVariable";
    case ErrorKind::InvalidRequest: return "InvalidRequest";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::MalformedUpstream: return "MalformedUpstream";
    case ErrorKind::AuthFailure: return "AuthFailure";
    case ErrorKind::ScriptMiss: return "ScriptMiss";
    case ErrorKind::UnparsableOutput: return "UnparsableOutput";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorKind::EmptyGeneration: return "EmptyGeneration";
    case ErrorKind::SegmentationInvalid: return "SegmentationInvalid";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::KOutOfRange: return "KOutOfRange";
    case ErrorKind::EnhancementInvalid: return "EnhancementInvalid";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::IndexOutOfChunk: return "IndexOutOfChunk";
    case ErrorKind::ModificationLeak: return "ModificationLeak";
    case ErrorKind::EmptyTranscript: return "EmptyTranscript";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ZeroTotal: return "ZeroTotal";
    case ErrorKind::ZeroExpectedCell: return "ZeroExpectedCell";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::DegenerateDimension: return "DegenerateDimension";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::PairingMismatch: return "PairingMismatch";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace callsynth
