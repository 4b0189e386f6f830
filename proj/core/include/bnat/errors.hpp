#pragma once

#include <stdexcept>
#include <string>

namespace bnat {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration, flags, or arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (CSV rows, model files, label ranges).
class DataError : public Error {
public:
    using Error::Error;
};

/// Wire-protocol or session violations (bad frames, duplicates, shape mismatch).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A gather deadline expired with peers still missing.
class TimeoutError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

/// Non-finite values where the math requires finite ones.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace bnat
