#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subexp {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed expression text. Carries the byte offset of the offending token.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, std::size_t position)
        : Error(msg + " (at position " + std::to_string(position) + ")"), pos(position) {}
    std::size_t pos;
};

/// A prefix variable t<k> was referenced outside its allowed range.
class VariableOutOfScope : public Error {
public:
    VariableOutOfScope(const std::string& msg, std::size_t position)
        : Error(msg + " (at position " + std::to_string(position) + ")"), pos(position) {}
    std::size_t pos;
};

/// Evaluation left the function's domain (sqrt of a negative, division by zero).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// The feasibility probe found no point satisfying all constraints.
class InfeasibleDomain : public Error {
public:
    explicit InfeasibleDomain(const std::string& msg) : Error(msg) {}
};

/// A probe point where the declared lower bound exceeds the upper bound.
class BoundOrderViolation : public Error {
public:
    explicit BoundOrderViolation(const std::string& msg) : Error(msg) {}
};

/// A probe point where upper - lower exceeds the declared gap budget c_i.
class BudgetViolation : public Error {
public:
    explicit BudgetViolation(const std::string& msg) : Error(msg) {}
};

/// The requested method does not apply to this input (e.g. exact vertex
/// enumeration on non-affine bounds).
class MethodUnsupported : public Error {
public:
    explicit MethodUnsupported(const std::string& msg) : Error(msg) {}
};

/// The requested method exceeds its feasibility contract (e.g. DP size cap).
class MethodInfeasible : public Error {
public:
    explicit MethodInfeasible(const std::string& msg) : Error(msg) {}
};

/// The supplied finite sequences cannot certify the requested tail bound.
class NoSuchN : public Error {
public:
    explicit NoSuchN(const std::string& msg) : Error(msg) {}
};

/// A generated sequence member violates its declared pointwise monotonicity.
class MonotonicityViolated : public Error {
public:
    MonotonicityViolated(const std::string& msg, int m_index, int state_index)
        : Error(msg), m(m_index), state(state_index) {}
    int m;
    int state;
};

/// A generated sequence member escapes its declared dominating bound.
class DominationViolated : public Error {
public:
    DominationViolated(const std::string& msg, int m_index, int state_index)
        : Error(msg), m(m_index), state(state_index) {}
    int m;
    int state;
};

/// Invalid or inconsistent experiment specification (schema, lengths, ranges).
class SpecError : public Error {
public:
    explicit SpecError(const std::string& msg) : Error(msg) {}
};

} // namespace subexp
