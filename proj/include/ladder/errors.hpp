#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ladder {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class NotPSD : public Error {
public:
    using Error::Error;
};

class ZeroPivot : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class WidthMismatch : public Error {
public:
    using Error::Error;
};

class DegenerateSelfSimilarity : public Error {
public:
    using Error::Error;
};

class EmbeddingCollision : public Error {
public:
    using Error::Error;
};

/// Malformed external-embedding file; `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Expression that does not derive from the grammar; `position()` is the
/// 0-based token index (equal to the token count at end of input).
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, const std::string& what)
        : Error("token " + std::to_string(position) + ": " + what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class EmptyRecord : public Error {
public:
    using Error::Error;
};

class OptimizationFailed : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ladder
