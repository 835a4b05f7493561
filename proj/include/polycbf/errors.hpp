#pragma once

#include <stdexcept>
#include <string>

namespace polycbf {

enum class ErrorKind {
    InvalidSpec,
    EmptySet,
    TooManyHalfspaces,
    AssumptionViolated,
    UnboundedPositions,
    ParameterViolation,
    NotInC,
    NotRightInvertible,
    NotPositiveDefinite,
    Infeasible,
    OutsideNeighborhood,
    SingularInertia,
    NoSplit,
    InsufficientActuation,
    ConditionViolated,
    QpInfeasibleAt,
    NonFinite,
    NumericalBreakdown,
    InternalConsistency,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::TooManyHalfspaces: return "TooManyHalfspaces";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::UnboundedPositions: return "UnboundedPositions";
    case ErrorKind::ParameterViolation: return "ParameterViolation";
    case ErrorKind::NotInC: return "NotInC";
    case ErrorKind::NotRightInvertible: return "NotRightInvertible";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::OutsideNeighborhood: return "OutsideNeighborhood";
    case ErrorKind::SingularInertia: return "SingularInertia";
    case ErrorKind::NoSplit: return "NoSplit";
    case ErrorKind::InsufficientActuation: return "InsufficientActuation";
    case ErrorKind::ConditionViolated: return "ConditionViolated";
    case ErrorKind::QpInfeasibleAt: return "QpInfeasibleAt";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::InternalConsistency: return "InternalConsistency";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

} // namespace polycbf
