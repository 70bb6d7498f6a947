#ifndef MMFUSION_ERRORS_HPP
#define MMFUSION_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mmfusion {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or axis disagreement between tensors or graph nodes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// An argument value is outside the accepted domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// An operation was called in the wrong phase (e.g. backward before forward).
class StateError : public Error {
public:
    using Error::Error;
};

// Training diverged or produced a non-finite loss.
class TrainingError : public Error {
public:
    using Error::Error;
};

// A dataset on disk is missing files or otherwise unreadable.
class IngestionError : public Error {
public:
    using Error::Error;
};

// Plain file I/O failure.
class IoError : public Error {
public:
    using Error::Error;
};

// A binary container or checkpoint does not match its declared format.
class FormatError : public Error {
public:
    using Error::Error;
};

// A checkpoint does not belong to the architecture it is being loaded into.
class IncompatibilityError : public Error {
public:
    using Error::Error;
};

// Experiment configuration file is invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mmfusion

#endif
