#pragma once

#include <stdexcept>
#include <string>

namespace tpp {

/// Input violates a type invariant or an operation precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A drive request falls outside the thermal operating envelope.
class SafetyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fit did not converge or the data cannot identify the parameters.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tpp
