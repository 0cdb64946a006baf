#pragma once

#include <stdexcept>
#include <string>

namespace lcarma {

// Each category maps to one CLI exit code; see tools/lcarma.cpp.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ResourceError : public Error {
public:
    using Error::Error;
};

// Specific preconditions the kernel builders refuse.
class SingularSymbolError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class NotAFunctionError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class StationarityError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class WrapAroundError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

}  // namespace lcarma
