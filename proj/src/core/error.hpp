#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bbgp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: wrong dimension, out-of-domain point, malformed expression.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Singular systems, resonance, non-finite values, optimizer breakdown.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Configuration exceeds the dense-storage budget.
class ResourceLimit : public Error {
public:
    using Error::Error;
};

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide log sink. Passing an empty function restores the
// default (stderr for warnings, info dropped).
void set_log_sink(LogSink sink);
void log(LogLevel level, std::string_view message);

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

}  // namespace bbgp
