#pragma once

#include <stdexcept>
#include <string>

namespace slslr {

/// Bad call-site input: out-of-range index, inconsistent shapes, invalid config.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Data violates a documented invariant (NaN coordinates, empty sequence, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// On-disk artifact is syntactically unreadable (bad JSON, missing manifest).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// On-disk artifact parses but contradicts itself (declared vs actual payload shape).
class IntegrityError : public std::runtime_error {
public:
    explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values detected inside a numeric computation.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace slslr
