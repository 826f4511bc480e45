#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace callsynth {

enum class ErrorKind {
  // core
  MalformedRecord,
  IndexGap,
  UnknownSpeaker,
  UnknownLanguage,
  InvalidAttributes,
  NonPositiveDuration,
  // taxonomy
  LabelOutOfSet,
  DimensionMismatch,
  UnknownDimension,
  // llm gateway
  MissingVariable,
  InvalidRequest,
  InvalidConfig,
  Timeout,
  RateLimited,
  MalformedUpstream,
  AuthFailure,
  ScriptMiss,
  UnparsableOutput,
  SchemaViolation,
  UnknownLabel,
  ScoreOutOfRange,
  // generation
  EmptyGeneration,
  SegmentationInvalid,
  MissingCell,
  KOutOfRange,
  EnhancementInvalid,
  EmptyInput,
  IndexOutOfChunk,
  ModificationLeak,
  // evaluation
  EmptyTranscript,
  IndexOutOfRange,
  ZeroTotal,
  ZeroExpectedCell,
  LengthMismatch,
  NotNormalized,
  DegenerateDimension,
  // reconstruction
  OutOfRange,
  // shared
  PreconditionFailed,
  PairingMismatch,
  Io,
};

std::string_view to_string(ErrorKind k) noexcept;

// Every failure the toolkit raises carries a kind so callers can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}
  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }  // message without the kind prefix

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& detail) { throw Error(k, detail); }

inline void require(bool cond, ErrorKind k, const std::string& detail) {
  if (!cond) fail(k, detail);
}

}  // namespace callsynth
