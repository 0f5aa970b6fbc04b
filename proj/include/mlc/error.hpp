#pragma once

#include <stdexcept>
#include <string>

namespace mlc {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MLC_DEFINE_ERROR(Name)              \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

MLC_DEFINE_ERROR(ConfigError);
MLC_DEFINE_ERROR(FormatError);
MLC_DEFINE_ERROR(DataError);
MLC_DEFINE_ERROR(ShapeError);
MLC_DEFINE_ERROR(DegenerateFeature);
MLC_DEFINE_ERROR(DegenerateUpdate);
MLC_DEFINE_ERROR(EmptyCandidates);
MLC_DEFINE_ERROR(NoNegatives);
MLC_DEFINE_ERROR(EmptySet);
MLC_DEFINE_ERROR(NumericError);
MLC_DEFINE_ERROR(BatchCompositionError);
MLC_DEFINE_ERROR(EmptyCleanSet);
MLC_DEFINE_ERROR(EmptyGallery);

#undef MLC_DEFINE_ERROR

}  // namespace mlc
