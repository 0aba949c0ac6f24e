#pragma once

#include <stdexcept>
#include <string>

namespace conic {

// Base for all solver-level failures. Input validation uses std::domain_error
// directly so callers can distinguish "bad input" from "solve failed".
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Bernoulli inversion hit the vacuum limit (speed^2 >= 2*C0).
class CavitationError : public std::domain_error {
public:
    explicit CavitationError(const std::string& what) : std::domain_error(what) {}
};

// Denominator of the conical ODE system reached zero.
class SonicDegeneracyError : public SolverError {
public:
    explicit SonicDegeneracyError(const std::string& what) : SolverError(what) {}
};

// Step control underflowed while trying to keep the ODE denominator positive.
class StiffnessError : public SolverError {
public:
    explicit StiffnessError(const std::string& what) : SolverError(what) {}
};

// Tangency residual has no sign change in the admissible shock-slope bracket.
class ShockDetachedError : public SolverError {
public:
    explicit ShockDetachedError(const std::string& what) : SolverError(what) {}
};

// Lax entropy conditions failed on a candidate shock.
class EntropyError : public SolverError {
public:
    explicit EntropyError(const std::string& what) : SolverError(what) {}
};

// The root found is on the strong (subsonic-in-z) branch.
class StrongBranchError : public SolverError {
public:
    explicit StrongBranchError(const std::string& what) : SolverError(what) {}
};

// A linearized shock coefficient is too small to divide by.
class DivisionSafetyError : public SolverError {
public:
    explicit DivisionSafetyError(const std::string& what) : SolverError(what) {}
};

// Marching solver produced non-finite values.
class BlowupError : public SolverError {
public:
    BlowupError(const std::string& what, double station)
        : SolverError(what), z(station) {}
    double z;
};

// Perturbed shock left the tabulated background extension.
class ExtensionExceededError : public SolverError {
public:
    ExtensionExceededError(const std::string& what, double station)
        : SolverError(what), z(station) {}
    double z;
};

}  // namespace conic
