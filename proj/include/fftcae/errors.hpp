#pragma once

#include <stdexcept>
#include <string>

namespace fftcae {

/// Base of every error thrown by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FFTCAE_DEFINE_ERROR(Name) \
  class Name : public Error {     \
   public:                        \
    using Error::Error;           \
  }

FFTCAE_DEFINE_ERROR(IoError);
FFTCAE_DEFINE_ERROR(FormatError);
FFTCAE_DEFINE_ERROR(UnsupportedFormat);
FFTCAE_DEFINE_ERROR(LengthError);
FFTCAE_DEFINE_ERROR(DomainError);
FFTCAE_DEFINE_ERROR(ShapeError);
FFTCAE_DEFINE_ERROR(DataError);
FFTCAE_DEFINE_ERROR(RateError);
FFTCAE_DEFINE_ERROR(ModelFormatError);

#undef FFTCAE_DEFINE_ERROR

}  // namespace fftcae
