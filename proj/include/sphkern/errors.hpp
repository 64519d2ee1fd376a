#pragma once

#include <stdexcept>
#include <string>

namespace sphkern {

// Base class for every failure raised by the library. The CLI maps the
// concrete types onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPHKERN_DECLARE_ERROR(Name)       \
  class Name : public Error {             \
   public:                                \
    explicit Name(const std::string& msg) \
        : Error(#Name ": " + msg) {}      \
  }

SPHKERN_DECLARE_ERROR(DomainError);
SPHKERN_DECLARE_ERROR(OutOfRange);
SPHKERN_DECLARE_ERROR(DivergentIntegral);
SPHKERN_DECLARE_ERROR(QuadratureNotConverged);
SPHKERN_DECLARE_ERROR(NotTangent);
SPHKERN_DECLARE_ERROR(TruncationError);
SPHKERN_DECLARE_ERROR(UnboundedRatio);
SPHKERN_DECLARE_ERROR(DimensionTooSmall);
SPHKERN_DECLARE_ERROR(TailNotCertified);
SPHKERN_DECLARE_ERROR(NoRouteApplicable);
SPHKERN_DECLARE_ERROR(BandLimitExceeded);
SPHKERN_DECLARE_ERROR(NonPositive);
SPHKERN_DECLARE_ERROR(StepTooLarge);
SPHKERN_DECLARE_ERROR(KernelNotSmooth);
SPHKERN_DECLARE_ERROR(AllDegenerate);
SPHKERN_DECLARE_ERROR(PositivityLost);
SPHKERN_DECLARE_ERROR(ConfigError);

#undef SPHKERN_DECLARE_ERROR

}  // namespace sphkern
