#pragma once

#include <stdexcept>
#include <string>

namespace endow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ENDOW_ERROR(Name)                 \
    class Name : public Error {           \
    public:                               \
        using Error::Error;               \
    };

ENDOW_ERROR(InvalidParams)
ENDOW_ERROR(DegenerateMerton)
ENDOW_ERROR(DomainViolation)
ENDOW_ERROR(StiffnessFailure)
ENDOW_ERROR(BracketFailure)
ENDOW_ERROR(MonotonicityViolation)
ENDOW_ERROR(IntegrationFailure)
ENDOW_ERROR(TailEstimateFailure)
ENDOW_ERROR(IllPosedValue)
ENDOW_ERROR(NonpositiveBase)
ENDOW_ERROR(StepRejection)
ENDOW_ERROR(RegimeMismatch)

#undef ENDOW_ERROR

}  // namespace endow
