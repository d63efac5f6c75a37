#pragma once

#include <stdexcept>
#include <string>

namespace unlearn {

// Base class for every error the library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/layer shape disagreement.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed or truncated file contents (model container, IDX).
class FormatError : public Error {
public:
    using Error::Error;
};

// Invalid configuration values (fractions, lambda range, arch strings).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad runtime inputs (labels out of range, trigger coords past the feature dim).
class InputError : public Error {
public:
    using Error::Error;
};

// Operation called out of order (backward without a forward trace).
class StateError : public Error {
public:
    using Error::Error;
};

// NaN/Inf encountered where the contract requires finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace unlearn
