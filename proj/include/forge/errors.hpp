#pragma once

#include <stdexcept>
#include <string>

namespace forge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FORGE_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

FORGE_DEFINE_ERROR(InvalidConfig);
FORGE_DEFINE_ERROR(PlacementExhausted);
FORGE_DEFINE_ERROR(AmbiguousNearest);
FORGE_DEFINE_ERROR(DegenerateHeading);
FORGE_DEFINE_ERROR(ObjectNotVisible);
FORGE_DEFINE_ERROR(DuplicateOption);
FORGE_DEFINE_ERROR(GenerationStalled);
FORGE_DEFINE_ERROR(UnknownItem);
FORGE_DEFINE_ERROR(EndpointUnreachable);
FORGE_DEFINE_ERROR(DimensionMismatch);
FORGE_DEFINE_ERROR(EmptyScope);
FORGE_DEFINE_ERROR(IoError);

#undef FORGE_DEFINE_ERROR

}  // namespace forge
