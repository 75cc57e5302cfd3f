#pragma once

#include <stdexcept>
#include <string>

namespace tagctd {

// Every failure mode the library reports, one code per contract violation.
enum class Errc {
  // graph
  UnknownParent,
  UnknownNode,
  DepthExceeded,
  InvalidProbability,
  EmptyLabel,
  EmptyTree,
  MalformedDocument,
  InvariantViolation,
  // providers
  ProviderUnavailable,
  AuthFailure,
  MalformedProviderOutput,
  EmptyExtraction,
  EmptyCandidateList,
  NonPositiveProbability,
  // builder
  ExtractionFailed,
  // evaluator
  UndefinedMetric,
  EmptyEvaluation,
  OutOfRange,
  UnlabeledSample,
  CorpusParse,
  // detector
  NotToxic,
  // datagen
  WrongPanelShape,
  PatternViolation,
  // plumbing
  InvalidArgument,
  ConfigError,
  IoError,
};

const char* to_string(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace tagctd
