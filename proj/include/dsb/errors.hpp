#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsb {

// Every engine error derives from dsb::Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Committing to an already-decoded position.
class IllegalTransition : public Error {
public:
    using Error::Error;
};

// Sampler was asked to choose from an empty candidate set.
class NoCandidates : public Error {
public:
    using Error::Error;
};

// A cached K/V row was read before it had ever been computed.
class CacheIntegrityError : public Error {
public:
    using Error::Error;
};

class InvalidConfiguration : public Error {
public:
    using Error::Error;
};

class NoData : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string & what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace dsb
