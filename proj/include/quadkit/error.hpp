#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace quadkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_argument"; }
};

/// A numerical procedure broke down (non-convergence, loss of positivity, rank deficiency).
class NumericalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numerical_error"; }
};

/// A tensor product or index set would exceed the configured size cap.
class CapExceeded : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "cap_exceeded"; }
};

/// Maximum number of points/indices any single construction may produce.
/// Overridden by the QUADKIT_CAP environment variable.
inline std::uint64_t size_cap()
{
    constexpr std::uint64_t default_cap = 10'000'000;
    if (const char* env = std::getenv("QUADKIT_CAP")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
    }
    return default_cap;
}

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw InvalidArgument(message);
}

} // namespace quadkit
