#pragma once

#include <stdexcept>
#include <string>

namespace eyetheia {

// Shape/algebra incompatibility between tensors or layer specs.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or out-of-contract input data (files, payloads, annotations).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// No face / landmarks available for a frame.
class NoFaceError : public std::runtime_error {
public:
    NoFaceError() : std::runtime_error("no face") {}
    explicit NoFaceError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure (non-finite loss or gradient).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace eyetheia
