// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Adaptive quadrature failed to meet its tolerance.
class QuadratureError : public Error {
  public:
    QuadratureError(const std::string& what, double x) : Error(what), x_(x) {}
    /// Point at which the integral was requested (e.g. the density argument).
    double x() const noexcept { return x_; }

  private:
    double x_;
};

/// Simulation produced a non-finite state or was misconfigured.
class SimulationError : public Error {
  public:
    SimulationError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

/// A functional hit a non-finite integrand value.
class FunctionalError : public Error {
  public:
    FunctionalError(const std::string& what, std::size_t step, double x)
        : Error(what), step_(step), x_(x) {}
    std::size_t step() const noexcept { return step_; }
    double x() const noexcept { return x_; }

  private:
    std::size_t step_;
    double x_;
};

/// Configuration rejected at load time.
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace rdlab
