#pragma once

#include <stdexcept>
#include <string>

namespace deblur {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A requested kernel size leaves the latent image under-determined.
class InvalidSpecification : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

/// A shift would move nonzero mass off its canvas.
class OutOfSupport : public Error {
public:
    using Error::Error;
};

class UnsupportedChannels : public Error {
public:
    using Error::Error;
};

/// The requested canvas cannot pass through the generator's downsampling path.
class ArchitectureError : public Error {
public:
    using Error::Error;
};

/// A required data channel (for instance groundtruth values in a trace) is missing.
class Unavailable : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace deblur
