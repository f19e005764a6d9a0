#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdb {

// Base for every error the toolkit raises on bad input or violated preconditions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition on an argument was not met (bad count, out-of-range k, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed document. `offset` is a byte offset for XML and a 1-based line
// number for line-oriented formats; `unit()` says which.
class ParseError : public Error {
public:
    enum class Unit { byte, line };

    ParseError(const std::string& what, std::uint64_t offset, Unit unit)
        : Error(what + (unit == Unit::byte ? " at byte " : " at line ") + std::to_string(offset)),
          offset_(offset),
          unit_(unit) {}

    std::uint64_t offset() const noexcept { return offset_; }
    Unit unit() const noexcept { return unit_; }

private:
    std::uint64_t offset_;
    Unit unit_;
};

// Binary container problems: bad magic, truncated payload, duplicate ids.
class FormatError : public Error {
public:
    using Error::Error;
};

// Value-level degeneracy the caller must handle (zero variance, single class, ...).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

// I/O failure on a path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sdb
