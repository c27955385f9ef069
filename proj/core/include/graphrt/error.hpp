#pragma once

#include <stdexcept>
#include <string>

namespace graphrt {

// Every failure mode in the library maps to one code so tests can assert on
// the exact condition instead of matching message text.
enum class Errc {
  // tensor / kernel level
  ShapeMismatch,
  TokenOutOfRange,
  EmptyCache,
  CacheFull,
  // model level
  InvalidConfig,
  LengthOutOfRange,
  PromptTooLong,
  EmptyPrompt,
  // capture / replay
  CaptureInProgress,
  CaptureViolation,
  ForeignBuffer,
  SessionClosed,
  EmptyCapture,
  ReplayShapeError,
  WrongLength,
  // graph cache
  KeyMismatch,
  WarmupExceedsCapacity,
  // virtual device
  StaticInFusedBlock,
  DeviceStopped,
  UnknownEvent,
  // bench
  EmptySamples,
  IoError,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace graphrt
