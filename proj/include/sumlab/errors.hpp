#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sumlab {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration. `field()` is a dotted path into the config tree
/// (e.g. "device.stroke_mm"), empty when the error is not tied to a field.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
    explicit ConfigError(const std::string& message) : ConfigError(std::string{}, message) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class AsrError : public Error {
public:
    using Error::Error;
};

/// The stroke limit was reached before the responder signalled max-comfortable.
class AsrOutOfRange : public AsrError {
public:
    using AsrError::AsrError;
};

class ProcedureComplete : public Error {
public:
    using Error::Error;
};

class ProcedureIncomplete : public Error {
public:
    using Error::Error;
};

/// A response or request arrived that the current procedure state cannot accept.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class ChannelError : public Error {
public:
    using Error::Error;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Session log could not be replayed. `offset()` is the index of the last
/// event that was read and verified successfully (-1 when none was).
class ReplayError : public Error {
public:
    ReplayError(const std::string& message, std::ptrdiff_t last_valid_offset)
        : Error(message + " (last valid event offset " + std::to_string(last_valid_offset) + ")"),
          offset_(last_valid_offset) {}

    std::ptrdiff_t offset() const noexcept { return offset_; }

private:
    std::ptrdiff_t offset_;
};

}  // namespace sumlab
