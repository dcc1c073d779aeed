#ifndef EXTRUSION_ERROR_HPP
#define EXTRUSION_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace extrusion {

enum class ErrorKind {
  Domain,
  SingularDenominator,
  InfeasibleEquilibrium,
  Grid,
  Argument,
  InvariantViolation,
  Divergence,
  Convergence,
  Resolution,
  Coefficient,
  Compatibility,
  SingularG,
  InfeasibleH,
  InfeasibleHorizon,
  DegenerateTarget,
  SchemeInvalid,
  Config,
  Verification,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::SingularDenominator: return "singular denominator";
    case ErrorKind::InfeasibleEquilibrium: return "infeasible equilibrium";
    case ErrorKind::Grid: return "grid error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::InvariantViolation: return "invariant violation";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Convergence: return "no convergence";
    case ErrorKind::Resolution: return "resolution error";
    case ErrorKind::Coefficient: return "coefficient error";
    case ErrorKind::Compatibility: return "compatibility error";
    case ErrorKind::SingularG: return "singular g";
    case ErrorKind::InfeasibleH: return "infeasible h";
    case ErrorKind::InfeasibleHorizon: return "infeasible horizon";
    case ErrorKind::DegenerateTarget: return "degenerate target";
    case ErrorKind::SchemeInvalid: return "scheme invalid";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Verification: return "verification failure";
  }
  return "error";
}

/// Every failure raised by the library carries a kind so callers (and the CLI
/// exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace extrusion

#endif  // EXTRUSION_ERROR_HPP
