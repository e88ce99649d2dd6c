#pragma once

#include <stdexcept>
#include <string>

namespace plap {

/// Base of every error raised by the library. `kind()` is the stable
/// identifier used in reports and CLI diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define PLAP_DEFINE_ERROR(Name)                                            \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& what) : Error(#Name, what) {}     \
    }

PLAP_DEFINE_ERROR(DomainError);
PLAP_DEFINE_ERROR(NonPositiveCoefficient);
PLAP_DEFINE_ERROR(IndexViolation);
PLAP_DEFINE_ERROR(SingularAtZero);
PLAP_DEFINE_ERROR(DivergentIntegral);
PLAP_DEFINE_ERROR(SingularPoint);
PLAP_DEFINE_ERROR(CriticalPoint);
PLAP_DEFINE_ERROR(NonsmoothCoefficient);
PLAP_DEFINE_ERROR(ConstraintViolation);
PLAP_DEFINE_ERROR(SingularOmega);
PLAP_DEFINE_ERROR(NewtonStall);
PLAP_DEFINE_ERROR(ContinuationAbort);
PLAP_DEFINE_ERROR(GeometryError);
PLAP_DEFINE_ERROR(ConfigError);

#undef PLAP_DEFINE_ERROR

// Throws DomainError with `msg` unless `cond` holds.
void require(bool cond, const std::string& msg);

}  // namespace plap
