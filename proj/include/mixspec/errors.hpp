#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace mixspec {

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot reach its requested accuracy.
/// Carries the best error estimate that was achieved.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double achieved_error)
        : std::runtime_error(what + " (achieved error estimate " + format(achieved_error) + ")"),
          achieved_error_(achieved_error) {}

    double achieved_error() const noexcept { return achieved_error_; }

private:
    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return buf;
    }
    double achieved_error_;
};

inline void require(bool condition, const char* message) {
    if (!condition) throw InvalidArgument(message);
}

}  // namespace mixspec
