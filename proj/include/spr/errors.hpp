#ifndef SPR_ERRORS_HPP
#define SPR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid scalar arguments (negative sigma, alpha_r <= 1, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Grid shape violations: dim mismatch, non-cubic input where a cube is required.
struct ShapeError : Error {
    using Error::Error;
};

// Requested grid would overflow addressable storage.
struct SizeError : Error {
    using Error::Error;
};

// Spectrum fails the Hermitian-symmetry tolerance of a real field.
struct SymmetryError : Error {
    using Error::Error;
};

// Input degenerate for the requested operation (all-zero spectrum, flat histogram).
struct DegenerateInputError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : IoError {
    using IoError::IoError;
};

struct LengthError : IoError {
    using IoError::IoError;
};

struct DataError : IoError {
    using IoError::IoError;
};

}  // namespace spr

#endif
