#pragma once

#include <stdexcept>
#include <string>

namespace netlqr {

// Bad user-supplied parameters (CLI exit code 2).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

class TopologyError : public ParameterError {
public:
    explicit TopologyError(const std::string& what) : ParameterError(what) {}
};

// A controller left the stabilizing set (CLI exit code 3).
class StabilityError : public std::runtime_error {
public:
    explicit StabilityError(const std::string& what, int step = -1)
        : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

// Solver breakdown: divergence, residual failure, NaN (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Inputs that make a quantity undefined (all-zero matrix fits and the like).
class DegenerateInputError : public std::invalid_argument {
public:
    explicit DegenerateInputError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace netlqr
