#pragma once

#include <stdexcept>
#include <string>

namespace sheepweight {

// Every error raised by the library derives from Error so callers can catch
// one type; the subclasses let the CLI map failures onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};

class DegenerateVarianceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// The input file or directory does not exist.
class MissingInputError : public IoError {
public:
    using IoError::IoError;
};

class FormatError : public IoError {
public:
    using IoError::IoError;
};

class CorruptFileError : public FormatError {
public:
    using FormatError::FormatError;
};

class ShapeMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace sheepweight
