#pragma once

#include <stdexcept>
#include <string>

namespace qwd {

struct SourceSpan {
  int line = 0;  // 1-based; 0 means "no location"
  int column = 0;
  std::size_t offset = 0;

  bool valid() const { return line > 0; }
  std::string str() const;
};

enum class ErrorKind {
  NonUnitaryGate,
  NonDensitySigma,
  NonHermitianObservable,
  IncompleteMeasurement,
  DimMismatch,
  UndeclaredName,
  DuplicateName,
  DimensionCapExceeded,
  InvalidProgram,
  SyntaxError,
  DegenerateHamiltonian,
  UnsupportedGate,
  LoopBudgetExceeded,
  ShotBudgetExceeded,
  UnsupportedOccurrence,
  DegenerateAlpha,
  UnsupportedSpectrum,
  AllUnitSpectrum,
  NonDiagonalizable,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

// Broad classification used by the CLI to pick exit codes.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string path = {},
        SourceSpan span = {});

  ErrorKind kind() const { return kind_; }
  const std::string& path() const { return path_; }
  const SourceSpan& span() const { return span_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string path_;
  SourceSpan span_;
  std::string detail_;
};

}  // namespace qwd
