#pragma once

#include <stdexcept>
#include <string>

namespace kbp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define KBP_DEFINE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    explicit Name(const std::string& msg) \
        : Error(#Name ": " + msg) {}      \
  }

KBP_DEFINE_ERROR(DimensionMismatch);
KBP_DEFINE_ERROR(UnknownLeg);
KBP_DEFINE_ERROR(NameCollision);
KBP_DEFINE_ERROR(DecompositionFailure);
KBP_DEFINE_ERROR(EmptyCore);
KBP_DEFINE_ERROR(InvalidPlan);
KBP_DEFINE_ERROR(SizeCapExceeded);
KBP_DEFINE_ERROR(FormatError);
KBP_DEFINE_ERROR(InvalidSize);
KBP_DEFINE_ERROR(UnsupportedShape);
KBP_DEFINE_ERROR(ShapeMismatch);
KBP_DEFINE_ERROR(UnknownMode);
KBP_DEFINE_ERROR(UnknownEdge);
KBP_DEFINE_ERROR(InvalidGeometry);
KBP_DEFINE_ERROR(SingularNormalMatrix);
KBP_DEFINE_ERROR(NonCommutingWithinGroup);
KBP_DEFINE_ERROR(NonPSDInput);
KBP_DEFINE_ERROR(InvariantViolation);
KBP_DEFINE_ERROR(ConfigError);

#undef KBP_DEFINE_ERROR

}  // namespace kbp
