#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace neumann {

// Base of every error raised by the library. Each concrete type maps to one
// failure mode named in the module contracts.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonPositiveRadius : public Error {
public:
    using Error::Error;
};

class ResolutionTooSmall : public Error {
public:
    using Error::Error;
};

class MeshMismatch : public Error {
public:
    MeshMismatch() : Error("grid functions live on different meshes") {}
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

class DegenerateData : public Error {
public:
    using Error::Error;
};

// Raised when the Neumann data violate the compatibility condition beyond
// tolerance. Carries the measured defect int f - oint g.
class IncompatibleData : public Error {
public:
    IncompatibleData(double defect, const std::string& what)
        : Error(what), defect_(defect) {}
    double defect() const noexcept { return defect_; }

private:
    double defect_;
};

class LinearSolveFailure : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    NonConvergence(int iterations, double residual, const std::string& what)
        : Error(what), iterations_(iterations), residual_(residual) {}
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

class NonZeroMeanInput : public Error {
public:
    using Error::Error;
};

class BallNotContained : public Error {
public:
    using Error::Error;
};

class InvalidExponent : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Expression errors.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& what)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnknownIdentifier : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace neumann
