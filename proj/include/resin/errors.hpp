#pragma once

#include <stdexcept>
#include <string>

namespace resin {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A program failed to lex, parse, typecheck, ground or stratify.
// The message carries "file:line:col: text" diagnostics, one per line.
struct CompileError : Error {
    using Error::Error;
};

// A circuit was asked for a value it cannot produce (missing literal
// weight, unknown atom, never-evaluated root).
struct EvalError : Error {
    using Error::Error;
};

// A value is outside its domain (probability outside [0,1], negative
// stddev, complement on a semiring without one).
struct DomainError : Error {
    using Error::Error;
};

// Bad engine/bench configuration (non-positive bandwidth, unparsable
// config file, bad socket address).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace resin
