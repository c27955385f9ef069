#include "graphrt/error.hpp"

namespace graphrt {

const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TokenOutOfRange: return "TokenOutOfRange";
    case Errc::EmptyCache: return "EmptyCache";
    case Errc::CacheFull: return "CacheFull";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::LengthOutOfRange: return "LengthOutOfRange";
    case Errc::PromptTooLong: return "PromptTooLong";
    case Errc::EmptyPrompt: return "EmptyPrompt";
    case Errc::CaptureInProgress: return "CaptureInProgress";
    case Errc::CaptureViolation: return "CaptureViolation";
    case Errc::ForeignBuffer: return "ForeignBuffer";
    case Errc::SessionClosed: return "SessionClosed";
    case Errc::EmptyCapture: return "EmptyCapture";
    case Errc::ReplayShapeError: return "ReplayShapeError";
    case Errc::WrongLength: return "WrongLength";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::WarmupExceedsCapacity: return "WarmupExceedsCapacity";
    case Errc::StaticInFusedBlock: return "StaticInFusedBlock";
    case Errc::DeviceStopped: return "DeviceStopped";
    case Errc::UnknownEvent: return "UnknownEvent";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace graphrt
