#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace rmt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (z on the support, T <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Caller misuse: shape mismatch, wrong chain arity, unsupported combination.
class UsageError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public UsageError {
public:
    using UsageError::UsageError;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what,
                            double achieved = std::numeric_limits<double>::quiet_NaN())
        : Error(what), achieved_(achieved) {}
    double achieved_tolerance() const { return achieved_; }

private:
    double achieved_;
};

class BudgetError : public UsageError {
public:
    using UsageError::UsageError;
};

}  // namespace rmt
