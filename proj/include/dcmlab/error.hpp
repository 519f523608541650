#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dcmlab {

/// Base of every error thrown by dcmlab.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (model files, degree sequences, configs).
class InputError : public Error {
public:
    using Error::Error;
};

/// Rejection sampling for a simple digraph gave up.
class SimpleGenerationError : public Error {
public:
    SimpleGenerationError(std::uint64_t attempts, const std::string& what)
        : Error(what), attempts_(attempts) {}
    std::uint64_t attempts() const { return attempts_; }

private:
    std::uint64_t attempts_;
};

/// Graph is not strongly connected; carries one unreachable ordered pair.
class NotStronglyConnected : public Error {
public:
    NotStronglyConnected(std::uint32_t from, std::uint32_t to)
        : Error("graph is not strongly connected: vertex " + std::to_string(to) + " is unreachable from " +
                std::to_string(from)),
          from_(from), to_(to) {}
    std::uint32_t from() const { return from_; }
    std::uint32_t to() const { return to_; }

private:
    std::uint32_t from_;
    std::uint32_t to_;
};

/// Iterative solver ran out of iterations.
class NonConvergence : public Error {
public:
    NonConvergence(std::uint64_t iterations, double residual)
        : Error("no convergence after " + std::to_string(iterations) + " iterations (last residual " +
                std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}
    std::uint64_t iterations() const { return iterations_; }
    double residual() const { return residual_; }

private:
    std::uint64_t iterations_;
    double residual_;
};

/// A tail fit could not be performed on the given samples.
class FitRefused : public Error {
public:
    using Error::Error;
};

}  // namespace dcmlab
