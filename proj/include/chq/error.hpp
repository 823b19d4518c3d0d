#pragma once

#include <stdexcept>
#include <string>

namespace chq {

enum class Errc {
  RegimeViolation,
  OutOfRange,
  NonPositiveConstant,
  NonFinite,
  GridMismatch,
  AliasRisk,
  ZeroField,
  NoPositivePart,
  NoConvergence,
  TruncationActive,
  StepUnderflow,
  OutOfBox,
  EmptyM,
  Indistinct,
  FormatError,
  ConfigError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::RegimeViolation: return "RegimeViolation";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonPositiveConstant: return "NonPositiveConstant";
    case Errc::NonFinite: return "NonFinite";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::AliasRisk: return "AliasRisk";
    case Errc::ZeroField: return "ZeroField";
    case Errc::NoPositivePart: return "NoPositivePart";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::TruncationActive: return "TruncationActive";
    case Errc::StepUnderflow: return "StepUnderflow";
    case Errc::OutOfBox: return "OutOfBox";
    case Errc::EmptyM: return "EmptyM";
    case Errc::Indistinct: return "Indistinct";
    case Errc::FormatError: return "FormatError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace chq
