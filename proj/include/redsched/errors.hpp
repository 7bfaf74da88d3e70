#pragma once

#include <stdexcept>
#include <string>

namespace redsched {

// Invalid scenario or call arguments. The CLI maps this to exit code 1.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A service-requirement distribution broke its contract (non-positive draw,
// mean not equal to one).
struct DistributionError : std::domain_error {
    using std::domain_error::domain_error;
};

// Closed-form quantity requested outside its domain, e.g. P-K at rho >= 1.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UnsupportedClosedForm : std::domain_error {
    using std::domain_error::domain_error;
};

// A pathwise property that must hold on every event was observed to fail.
// The CLI maps this to exit code 2.
struct PropertyViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace redsched
