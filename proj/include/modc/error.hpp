#pragma once

#include <stdexcept>
#include <string>

namespace modc {

enum class Errc {
  InvalidArgument,
  InvalidStep,
  TooLarge,
  ExhaustedRetries,
  EmptyResult,
  AllocationMismatch,
  BudgetExceedsSamples,
  EmptyCorpus,
  UnknownToken,
  DegenerateInput,
  LabelMismatch,
  SchemaMismatch,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// One exception type per error code so callers can catch exactly what they
// handle.
template <Errc C>
class ErrorOf : public Error {
 public:
  explicit ErrorOf(const std::string& what) : Error(C, what) {}
};

using InvalidArgument = ErrorOf<Errc::InvalidArgument>;
using InvalidStep = ErrorOf<Errc::InvalidStep>;
using TooLarge = ErrorOf<Errc::TooLarge>;
using ExhaustedRetries = ErrorOf<Errc::ExhaustedRetries>;
using EmptyResult = ErrorOf<Errc::EmptyResult>;
using AllocationMismatch = ErrorOf<Errc::AllocationMismatch>;
using BudgetExceedsSamples = ErrorOf<Errc::BudgetExceedsSamples>;
using EmptyCorpus = ErrorOf<Errc::EmptyCorpus>;
using UnknownToken = ErrorOf<Errc::UnknownToken>;
using DegenerateInput = ErrorOf<Errc::DegenerateInput>;
using LabelMismatch = ErrorOf<Errc::LabelMismatch>;
using SchemaMismatch = ErrorOf<Errc::SchemaMismatch>;

inline const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidStep: return "InvalidStep";
    case Errc::TooLarge: return "TooLarge";
    case Errc::ExhaustedRetries: return "ExhaustedRetries";
    case Errc::EmptyResult: return "EmptyResult";
    case Errc::AllocationMismatch: return "AllocationMismatch";
    case Errc::BudgetExceedsSamples: return "BudgetExceedsSamples";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::UnknownToken: return "UnknownToken";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

}  // namespace modc
