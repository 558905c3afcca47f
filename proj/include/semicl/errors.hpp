#pragma once

#include <stdexcept>
#include <string>

namespace semicl {

enum class ErrorKind {
  Config,
  DegenerateLattice,
  EigenSolver,
  GapClosure,
  GridTooCoarse,
  NonQuantized,
  InvalidFlux,
  UnsupportedDimension,
  DegenerateDenominator,
  SymplecticDegeneracy,
  TruncatedTrajectory,
  PacketWidth,
  Transform,
  Aliasing,
  GridAlignment,
  Folding,
  Inconsistency,
  Domain,
  Instability,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::DegenerateLattice: return "degenerate lattice";
    case ErrorKind::EigenSolver: return "eigensolver failure";
    case ErrorKind::GapClosure: return "gap closure";
    case ErrorKind::GridTooCoarse: return "grid too coarse";
    case ErrorKind::NonQuantized: return "non-quantized Chern sum";
    case ErrorKind::InvalidFlux: return "invalid flux";
    case ErrorKind::UnsupportedDimension: return "unsupported dimension";
    case ErrorKind::DegenerateDenominator: return "degenerate denominator";
    case ErrorKind::SymplecticDegeneracy: return "symplectic degeneracy";
    case ErrorKind::TruncatedTrajectory: return "truncated trajectory";
    case ErrorKind::PacketWidth: return "packet width";
    case ErrorKind::Transform: return "Bloch-Floquet transform";
    case ErrorKind::Aliasing: return "aliasing";
    case ErrorKind::GridAlignment: return "grid alignment";
    case ErrorKind::Folding: return "folding";
    case ErrorKind::Inconsistency: return "inconsistency";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Instability: return "instability";
  }
  return "error";
}

/// Single exception type for the library. The kind selects the CLI exit code:
/// configuration problems map to 2, everything else is a numerical-validity
/// failure and maps to 3.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool is_config() const noexcept { return kind_ == ErrorKind::Config; }

 private:
  ErrorKind kind_;
};

}  // namespace semicl
