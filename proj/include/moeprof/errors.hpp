#pragma once

#include <stdexcept>
#include <string>

namespace moeprof {

// Error taxonomy shared by every module. The CLI maps these onto exit codes.

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class LengthError : public std::length_error {
public:
    using std::length_error::length_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChannelError : public FormatError {
public:
    using FormatError::FormatError;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace moeprof
