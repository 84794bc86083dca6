#pragma once

#include <stdexcept>
#include <string>

namespace pglmm {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated input files.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Inputs that are well-formed but inconsistent (duplicate IDs, leakage,
/// mismatched dimensions).
class DataError : public Error {
public:
    using Error::Error;
};

/// Linear-algebra failure or a fit that cannot proceed.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Invalid argument supplied by the caller.
class ArgumentError : public Error {
public:
    using Error::Error;
};

}  // namespace pglmm
