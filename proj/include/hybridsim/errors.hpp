#pragma once

#include <stdexcept>
#include <string>

namespace hybridsim {

// Invalid user input: bad parameters, malformed files, out-of-range targets.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failure: non-convergence, charge violation, overflow of the
// configured state capacity.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapacityError : NumericalError {
    using NumericalError::NumericalError;
};

struct ChargeViolation : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace hybridsim
