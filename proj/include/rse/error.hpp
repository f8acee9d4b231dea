#pragma once

#include <stdexcept>
#include <string>

namespace rse {

// Error families. The CLI maps each family to its own exit code.
enum class ErrorCategory : int {
    numeric = 3,
    config = 4,
    io = 5,
    usage = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string &what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct SingularMatrix : Error {
    explicit SingularMatrix(const std::string &what) : Error(ErrorCategory::numeric, what) {}
};

struct NoConvergence : Error {
    explicit NoConvergence(const std::string &what) : Error(ErrorCategory::numeric, what) {}
};

struct NonFinite : Error {
    explicit NonFinite(const std::string &what) : Error(ErrorCategory::numeric, what) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string &what) : Error(ErrorCategory::usage, what) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string &what) : Error(ErrorCategory::usage, what) {}
};

struct BufferTooSmall : Error {
    explicit BufferTooSmall(const std::string &what) : Error(ErrorCategory::usage, what) {}
};

struct ParseError : Error {
    ParseError(const std::string &what, std::size_t line)
        : Error(ErrorCategory::config, what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// `field()` names the violated invariant, e.g. "rho".
struct ValidationError : Error {
    ValidationError(const std::string &field, const std::string &what)
        : Error(ErrorCategory::config, "invalid '" + field + "': " + what), field_(field) {}
    const std::string &field() const noexcept { return field_; }

private:
    std::string field_;
};

struct UnknownKey : Error {
    explicit UnknownKey(const std::string &key)
        : Error(ErrorCategory::config, "unknown config key '" + key + "'"), key_(key) {}
    const std::string &key() const noexcept { return key_; }

private:
    std::string key_;
};

struct IoError : Error {
    explicit IoError(const std::string &what) : Error(ErrorCategory::io, what) {}
};

struct EmptyLog : Error {
    explicit EmptyLog(const std::string &what = "episode log is empty") : Error(ErrorCategory::io, what) {}
};

} // namespace rse
