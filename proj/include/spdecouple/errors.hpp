#pragma once

#include <stdexcept>
#include <string>

namespace spdecouple {

// Violated operation precondition (bad grid size, non-unit direction, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A trajectory left the admissible region |X|_4 <= blowup_guard.
class BlowUp : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QuadratureFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A log-domain quantity is not representable as a double.
class Overflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateFit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace spdecouple
