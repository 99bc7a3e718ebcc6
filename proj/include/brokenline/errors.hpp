#pragma once

#include <stdexcept>
#include <string>

namespace brokenline {

/// Bad user input: precondition violations, malformed configs.
struct ValidationError : std::invalid_argument {
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation failed to reach its stated tolerance or left the
/// representable range.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Overflow of an exponentially growing quantity; distinct from domain
/// errors so callers can switch to the scaled evaluation path.
struct OverflowError : NumericalError {
    explicit OverflowError(const std::string& what) : NumericalError(what) {}
};

} // namespace brokenline
