#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phevdemand {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its mathematical domain (sigma^2 <= 0, nu > 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Vector or matrix dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A moment-matching target cannot be reached within the chosen family.
class InfeasibleTargetError : public Error {
public:
    using Error::Error;
};

/// MAPE is undefined because a target is exactly zero.
class ZeroTargetError : public Error {
public:
    ZeroTargetError(std::size_t index)
        : Error("mape: target at index " + std::to_string(index) + " is zero"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// The SMO solver exhausted its iteration budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double final_violation)
        : Error(what), final_violation_(final_violation) {}
    double final_violation() const noexcept { return final_violation_; }

private:
    double final_violation_;
};

/// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t row, std::size_t column = 0)
        : Error(format(message, row, column)), row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& message, std::size_t row, std::size_t column) {
        if (row == 0) {
            return message;
        }
        std::string out = "line " + std::to_string(row);
        if (column != 0) {
            out += ", column " + std::to_string(column);
        }
        return out + ": " + message;
    }
    std::size_t row_;
    std::size_t column_;
};

/// Invalid configuration supplied to a driver (grid spec, CLI config).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace phevdemand
