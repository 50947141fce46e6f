#include "qwd/errors.hpp"

namespace qwd {

std::string SourceSpan::str() const {
  if (!valid()) return "<unknown>";
  return std::to_string(line) + ":" + std::to_string(column);
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonUnitaryGate: return "NonUnitaryGate";
    case ErrorKind::NonDensitySigma: return "NonDensitySigma";
    case ErrorKind::NonHermitianObservable: return "NonHermitianObservable";
    case ErrorKind::IncompleteMeasurement: return "IncompleteMeasurement";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::UndeclaredName: return "UndeclaredName";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorKind::InvalidProgram: return "InvalidProgram";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::DegenerateHamiltonian: return "DegenerateHamiltonian";
    case ErrorKind::UnsupportedGate: return "UnsupportedGate";
    case ErrorKind::LoopBudgetExceeded: return "LoopBudgetExceeded";
    case ErrorKind::ShotBudgetExceeded: return "ShotBudgetExceeded";
    case ErrorKind::UnsupportedOccurrence: return "UnsupportedOccurrence";
    case ErrorKind::DegenerateAlpha: return "DegenerateAlpha";
    case ErrorKind::UnsupportedSpectrum: return "UnsupportedSpectrum";
    case ErrorKind::AllUnitSpectrum: return "AllUnitSpectrum";
    case ErrorKind::NonDiagonalizable: return "NonDiagonalizable";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonUnitaryGate:
    case ErrorKind::NonDensitySigma:
    case ErrorKind::NonHermitianObservable:
    case ErrorKind::IncompleteMeasurement:
    case ErrorKind::DimMismatch:
    case ErrorKind::UndeclaredName:
    case ErrorKind::DuplicateName:
    case ErrorKind::DimensionCapExceeded:
    case ErrorKind::InvalidProgram:
    case ErrorKind::SyntaxError:
    case ErrorKind::UnsupportedOccurrence:
    case ErrorKind::UnsupportedGate:
      return true;
    default:
      return false;
  }
}

namespace {
std::string compose(ErrorKind kind, const std::string& message,
                    const std::string& path, const SourceSpan& span) {
  std::string out = to_string(kind);
  if (span.valid()) out += " at " + span.str();
  if (!path.empty()) out += " (" + path + ")";
  out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::string path,
             SourceSpan span)
    : std::runtime_error(compose(kind, message, path, span)),
      kind_(kind),
      path_(std::move(path)),
      span_(span),
      detail_(message) {}

}  // namespace qwd
