#pragma once

#include <stdexcept>
#include <string>

namespace sekq {

/// Bad user input: malformed spec strings, inconsistent experiment configs.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No distribution satisfies the requested moments.
class InfeasibleParameters : public ConfigError {
public:
    InfeasibleParameters(const std::string& what, double discriminant)
        : ConfigError(what), discriminant_(discriminant) {}
    double discriminant() const noexcept { return discriminant_; }

private:
    double discriminant_;
};

/// The simulation kernel reached a state that only a missed event can explain.
class KernelError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Caller broke a documented precondition (e.g. unsorted input).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnstableRun : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PairingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sekq
