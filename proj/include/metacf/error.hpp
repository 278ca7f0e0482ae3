#pragma once

#include <stdexcept>
#include <string>

namespace metacf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (matrix CSV, registry JSON, dataset CSV).
class FormatError : public Error {
public:
    using Error::Error;
};

/// An argument outside its documented domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input data that cannot be processed (e.g. an empty matrix given to an engine).
class InputError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss during training.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Inconsistency discovered while scoring or aggregating an evaluation.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameter space or registry.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

}  // namespace metacf
