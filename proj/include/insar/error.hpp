#pragma once

#include <stdexcept>
#include <string>

namespace insar {

// Base of every error the library throws. The CLI maps the concrete type to
// an exit code (see tools/insarcoh.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file header, wrong magic, or layer-table mismatch.
class FormatError : public Error {
public:
    using Error::Error;
};

// Payload shorter or longer than the header promises.
class TruncationError : public FormatError {
public:
    using FormatError::FormatError;
};

// Well-formed container holding unusable values (NaN, Inf).
class DataError : public Error {
public:
    using Error::Error;
};

// Caller supplied an out-of-contract argument (window size, dims, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Tensor or raster shapes do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Input is valid but carries no information to work with.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Training diverged (NaN/Inf loss).
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace insar
