#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sceneseg {

// Failure classes used across the library. CLI exit codes map onto the
// coarse groups (config / io / transport / protocol / evaluation / data).
enum class ErrorKind {
  Config,
  Io,
  Schema,
  Invariant,
  ImageDecode,
  MissingFrame,
  Transport,
  Protocol,
  BudgetExceeded,
  VerdictTokenMissing,
  DegenerateProbs,
  Partition,
  ScopeMissing,
  NoPositives,
  LengthMismatch,
  EmptyPosition,
  EmptyGroundTruth,
  DimensionMismatch,
  EmptySpanClass,
  UnknownVerdictPosition,
  InvalidDump,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Invariant: return "invariant";
    case ErrorKind::ImageDecode: return "image_decode";
    case ErrorKind::MissingFrame: return "missing_frame";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::BudgetExceeded: return "budget_exceeded";
    case ErrorKind::VerdictTokenMissing: return "verdict_token_missing";
    case ErrorKind::DegenerateProbs: return "degenerate_probs";
    case ErrorKind::Partition: return "partition";
    case ErrorKind::ScopeMissing: return "scope_missing";
    case ErrorKind::NoPositives: return "no_positives";
    case ErrorKind::LengthMismatch: return "length_mismatch";
    case ErrorKind::EmptyPosition: return "empty_position";
    case ErrorKind::EmptyGroundTruth: return "empty_ground_truth";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::EmptySpanClass: return "empty_span_class";
    case ErrorKind::UnknownVerdictPosition: return "unknown_verdict_position";
    case ErrorKind::InvalidDump: return "invalid_dump";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  const char* kind_name() const noexcept { return error_kind_name(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace sceneseg
