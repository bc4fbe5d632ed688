#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace agro {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shipped data files (registry, scoring table, manifest) missing or corrupt.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Caller handed an operation something outside its contract.
class UsageError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace agro
