#pragma once

#include <stdexcept>
#include <string>

namespace glu {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input violates a documented precondition (dimension mismatch, bad range).
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

/// A sensing or topology model cannot be built as described.
class ModelError : public Error {
public:
    explicit ModelError(const std::string& msg) : Error(msg) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// The drift matrix of a linearized recursion is not Hurwitz.
class StabilityError : public Error {
public:
    explicit StabilityError(const std::string& msg) : Error(msg) {}
};

/// The observation Grammian is singular.
class ObservabilityError : public Error {
public:
    explicit ObservabilityError(const std::string& msg) : Error(msg) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace glu
