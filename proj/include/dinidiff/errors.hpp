#pragma once

#include <stdexcept>
#include <string>

namespace dini {

// Exit-code classes used by the CLI: 1 = property violation, 2 = usage/schema, 3 = budget.
struct PropertyViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SeparationViolated : PropertyViolation {
    using PropertyViolation::PropertyViolation;
};
struct NotExact : UsageError {
    using UsageError::UsageError;
};
struct PreconditionViolated : UsageError {
    using UsageError::UsageError;
};
struct BaseMismatch : UsageError {
    using UsageError::UsageError;
};
struct NoAtomlessnessCertificate : UsageError {
    using UsageError::UsageError;
};
struct DomainGap : UsageError {
    using UsageError::UsageError;
};
struct RangeUnsupported : UsageError {
    using UsageError::UsageError;
};
struct LipschitzViolated : PropertyViolation {
    using PropertyViolation::PropertyViolation;
};
struct NestingViolated : PropertyViolation {
    using PropertyViolation::PropertyViolation;
};
struct MeasureTooLarge : PropertyViolation {
    using PropertyViolation::PropertyViolation;
};
struct NotInCover : UsageError {
    using UsageError::UsageError;
};
struct DepthExceeded : BudgetExceeded {
    using BudgetExceeded::BudgetExceeded;
};
struct SplitBudgetExceeded : BudgetExceeded {
    using BudgetExceeded::BudgetExceeded;
};
struct PrecisionUnavailable : UsageError {
    using UsageError::UsageError;
};
struct UnknownName : UsageError {
    using UsageError::UsageError;
};
struct Stalled : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dini
