#pragma once

#include <stdexcept>
#include <string>

namespace cfreq {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent network / device data.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Device parameters that make a model ill-posed (e.g. a singular stator matrix).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Non-finite input or a quantity outside its mathematical domain.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Case file or command-line input that fails validation.
class InputError : public Error {
public:
    using Error::Error;
};

/// Power flow / dynamic initialization failure.
class InitError : public Error {
public:
    using Error::Error;
};

/// Newton failure inside an integration step.
class StepError : public Error {
public:
    using Error::Error;
};

/// Consistent re-initialization after a discrete event failed.
class EventError : public Error {
public:
    using Error::Error;
};

/// Estimator was asked for a result its input cannot support.
class EstimationError : public Error {
public:
    using Error::Error;
};

}  // namespace cfreq
