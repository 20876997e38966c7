#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace conekit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Syntax or name error in an expression source.  `offset` is a byte offset
/// into the source; line/column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          offset_(offset), line_(line), column_(column) {}

    std::size_t offset() const noexcept { return offset_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t offset_;
    std::size_t line_;
    std::size_t column_;
};

/// Evaluation outside the domain of a sub-expression (sqrt of a negative, ...).
class DomainError : public Error {
public:
    DomainError(const std::string& msg, std::string subexpr)
        : Error(msg + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)) {}
    const std::string& subexpression() const noexcept { return subexpr_; }

private:
    std::string subexpr_;
};

/// Quadrature non-convergence, divergence of an iteration, non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed problem file (JSON structure, missing keys, wrong types).
class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// One breached standing assumption.  `assumption` is the short canonical
/// name of the hypothesis, `detail` says where and by how much.
struct Violation {
    std::string assumption;
    std::string detail;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> v)
        : Error(format(v)), violations_(std::move(v)) {}
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    static std::string format(const std::vector<Violation>& v) {
        std::string out = "assumption violated";
        for (const auto& x : v) out += "\n  [" + x.assumption + "] " + x.detail;
        return out;
    }
    std::vector<Violation> violations_;
};

/// A hypothesis of the 2x2 order-preserving inverse does not hold, or a derived
/// constant breaks its invariant.  `name` identifies the quantity.
class HypothesisError : public Error {
public:
    HypothesisError(std::string name, const std::string& msg) : Error(name + ": " + msg), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Bad request to the index machinery (empty or non-alternating ladder, ...).
class LadderError : public Error {
public:
    using Error::Error;
};

}  // namespace conekit
