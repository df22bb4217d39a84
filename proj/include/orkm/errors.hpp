#pragma once

#include <stdexcept>
#include <string>

namespace orkm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes of matrices or vectors do not conform.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input data violates a type invariant (non-finite entry, label length, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Solver configuration is inconsistent with the data (K > N, chushi < K, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; the message carries the file location.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Unknown preset, metric code, or other caller-side usage mistake.
class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace orkm
