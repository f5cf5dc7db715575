#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bcpanel {

enum class ErrorKind {
  NotSymmetric,
  NotPSD,
  NotPD,
  RankDeficient,
  OutOfRange,
  DimensionMismatch,
  InsufficientData,
  ImproperPrior,
  DofTooSmall,
  NonFinite,
  NoRestriction,
  EmptyChain,
  Unstable,
  ParseError,
  MissingCell,
  RaggedPanel,
  DuplicateKey,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotPD: return "NotPD";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ImproperPrior: return "ImproperPrior";
    case ErrorKind::DofTooSmall: return "DofTooSmall";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NoRestriction: return "NoRestriction";
    case ErrorKind::EmptyChain: return "EmptyChain";
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::RaggedPanel: return "RaggedPanel";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace bcpanel
