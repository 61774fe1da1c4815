#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ginnlp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input outside the log domain (x <= 0 where a real power is required).
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    enum class Kind { Syntax, UnknownVariable, NonNumericExponent };

    ParseError(Kind kind, std::size_t offset, const std::string& what)
        : Error(what + " at offset " + std::to_string(offset))
        , kind_(kind)
        , offset_(offset)
    {
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

// Malformed or invalid dataset content. `line` is 1-based when known, 0 otherwise.
class DataError : public Error {
public:
    explicit DataError(const std::string& what, std::size_t line = 0)
        : Error(what)
        , line_(line)
    {
    }

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ginnlp
