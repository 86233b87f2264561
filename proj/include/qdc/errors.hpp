#pragma once

#include <stdexcept>
#include <string>

namespace qdc {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// The particle/wave basis collapses at theta = pi.
class DegenerateBasisError : public Error {
public:
    using Error::Error;
};

class GridMismatchError : public Error {
public:
    using Error::Error;
};

class UnnormalizedFieldError : public Error {
public:
    using Error::Error;
};

class DegenerateFitError : public Error {
public:
    using Error::Error;
};

class AnnulusOutsideGridError : public Error {
public:
    using Error::Error;
};

class OutOfRegimeError : public Error {
public:
    using Error::Error;
};

}  // namespace qdc
