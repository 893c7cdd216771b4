#pragma once

#include <stdexcept>
#include <string>

namespace opequiv {

// Every failure the library reports deliberately goes through this type so
// callers (and the CLI exit-code mapping) can dispatch on the kind.
class Error : public std::runtime_error {
public:
  enum class Kind {
    DimensionMismatch,
    Degenerate,          // regularity condition 1: g_sigma not invertible
    NearDefective,       // regularity condition 2: eigenvalue gap below tolerance
    NullNorm,            // regularity condition 3: isotropic eigencovector
    RealityViolation,    // R-family came out with a non-negligible imaginary part
    SingularBasis,       // lambda-tilde forms do not span S^2 T*
    NotRegular,          // composite regularity failure (carries the condition)
    NonInvertibleGauge,
    OrderUnderflow,
    RegularityHole,      // some chart points fail regularity
    NoIndependentInvariants,
    NotAFunction,
    IncompatibleWords,
    Parse,
  };

  Error(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  Kind kind() const { return kind_; }

  // Regularity-type failures map to CLI exit code 2.
  bool is_regularity_failure() const {
    switch (kind_) {
      case Kind::Degenerate:
      case Kind::NearDefective:
      case Kind::NullNorm:
      case Kind::SingularBasis:
      case Kind::NotRegular:
      case Kind::RegularityHole:
      case Kind::NoIndependentInvariants:
        return true;
      default:
        return false;
    }
  }

private:
  Kind kind_;
};

[[noreturn]] inline void fail(Error::Kind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, Error::Kind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace opequiv
