#pragma once

#include <stdexcept>
#include <string>

namespace mifno {

/// Violated precondition of a library call (bad shape, bad argument).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed, corrupted or inconsistent data on disk or in a dataset.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Container file problems, each reported with its own kind.
class ContainerError : public DataError {
public:
    enum class Kind { magic, truncated, crc, format, io };
    ContainerError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Numerical failure: non-finite values, unstable time step, undefined metric.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric whose value is undefined for the given input (e.g. all-zero reference).
class UndefinedMetric : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace mifno
