#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trussfa {

/// Bad input data: invalid model, out-of-range parameter, unknown id, bad file.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The structure is a mechanism; the stiffness matrix is singular.
class MechanismError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Malformed JSON input. `byte()` is the offset reported by the parser.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t byte)
        : ValidationError(what), byte_(byte) {}
    std::size_t byte() const noexcept { return byte_; }

private:
    std::size_t byte_;
};

/// Database built from a different model than the one supplied.
class FingerprintMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Cholesky breakdown or eigen iteration cap exceeded.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace trussfa
