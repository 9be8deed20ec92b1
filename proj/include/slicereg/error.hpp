#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slicereg {

enum class ErrorCode {
  InvalidArgument,
  InvalidWindow,
  InvalidSigma,
  TooSmall,
  DegenerateRange,
  DegenerateDistribution,
  NoStableRegion,
  NoTissueFound,
  DegenerateHull,
  InvalidConstraints,
  OnBoundary,
  IsolatedPoint,
  NoCorrespondences,
  DegenerateSystem,
  IcpStalled,
  SolverFailed,
  NonManifoldRegion,
  EmptyLandmarks,
  InvalidPhantomConfig,
  InvalidTearSpec,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::NoStableRegion: return "NoStableRegion";
    case ErrorCode::NoTissueFound: return "NoTissueFound";
    case ErrorCode::DegenerateHull: return "DegenerateHull";
    case ErrorCode::InvalidConstraints: return "InvalidConstraints";
    case ErrorCode::OnBoundary: return "OnBoundary";
    case ErrorCode::IsolatedPoint: return "IsolatedPoint";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::DegenerateSystem: return "DegenerateSystem";
    case ErrorCode::IcpStalled: return "IcpStalled";
    case ErrorCode::SolverFailed: return "SolverFailed";
    case ErrorCode::NonManifoldRegion: return "NonManifoldRegion";
    case ErrorCode::EmptyLandmarks: return "EmptyLandmarks";
    case ErrorCode::InvalidPhantomConfig: return "InvalidPhantomConfig";
    case ErrorCode::InvalidTearSpec: return "InvalidTearSpec";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. `stage()` is set by the pipeline
/// driver so that callers can tell which step of registration failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string stage = {})
      : std::runtime_error(stage.empty() ? std::string(to_string(code)) + ": " + what
                                         : "[" + stage + "] " + std::string(to_string(code)) + ": " + what),
        code_(code),
        stage_(std::move(stage)),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  Error with_stage(std::string stage) const { return Error(code_, detail_, std::move(stage)); }

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace slicereg
