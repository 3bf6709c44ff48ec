#pragma once

#include <stdexcept>
#include <string>

namespace shadowblow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter failed validation. `field()` names the offending field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what);
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

#define SHADOWBLOW_ERROR(Name)            \
    class Name : public Error {           \
    public:                               \
        using Error::Error;               \
    }

SHADOWBLOW_ERROR(DomainError);
SHADOWBLOW_ERROR(SingularThetaError);
SHADOWBLOW_ERROR(CriticalExponentError);
SHADOWBLOW_ERROR(DivergenceError);
SHADOWBLOW_ERROR(FitUnavailableError);
SHADOWBLOW_ERROR(WindowError);
SHADOWBLOW_ERROR(RegimeMismatchError);
SHADOWBLOW_ERROR(ConstructionError);
SHADOWBLOW_ERROR(ConsistencyError);
SHADOWBLOW_ERROR(NoSolutionError);
SHADOWBLOW_ERROR(UnavailableSampleError);
SHADOWBLOW_ERROR(NotFoundError);
SHADOWBLOW_ERROR(AccuracyError);
SHADOWBLOW_ERROR(InsufficientSamplesError);

#undef SHADOWBLOW_ERROR

}  // namespace shadowblow
