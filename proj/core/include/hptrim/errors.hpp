#pragma once

#include <stdexcept>
#include <string>

namespace hptrim {

// Invalid user-supplied parameters or configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A network spec (or a simulation of it) that is not stationary.
class StationarityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (event files, matrices, shapes).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hptrim
