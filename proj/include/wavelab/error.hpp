#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace wavelab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments: degenerate grids, out-of-range exponents, points outside a map's domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// A numerical run failed: CFL violation, NaN/Inf, causal window exceeded.
class SolverError : public Error {
public:
    using Error::Error;
};

// Malformed experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

using WarningHandler = std::function<void(const std::string&)>;

// Non-fatal diagnostics (e.g. reduced smoothness of the compactified coefficient)
// go through this hook. The default writes to stderr.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace wavelab
