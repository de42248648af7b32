#pragma once

#include <stdexcept>
#include <string>

namespace bsheet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BSHEET_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

BSHEET_DEFINE_ERROR(NotPSD);
BSHEET_DEFINE_ERROR(SingularObservation);
BSHEET_DEFINE_ERROR(DimMismatch);
BSHEET_DEFINE_ERROR(DomainError);
BSHEET_DEFINE_ERROR(GridTooLarge);
BSHEET_DEFINE_ERROR(OutOfBox);
BSHEET_DEFINE_ERROR(IndexMismatch);
BSHEET_DEFINE_ERROR(SNotAdmissible);
BSHEET_DEFINE_ERROR(GridMissingCorners);
BSHEET_DEFINE_ERROR(ResolutionTooCoarse);
BSHEET_DEFINE_ERROR(InvalidConfig);
BSHEET_DEFINE_ERROR(ContractViolation);

#undef BSHEET_DEFINE_ERROR

}  // namespace bsheet
