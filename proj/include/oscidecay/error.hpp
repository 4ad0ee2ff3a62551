#pragma once

#include <stdexcept>
#include <string>

namespace oscidecay {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input detected before any computation (maps to CLI exit code 2).
class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Non-finite values, non-convergence, exceeded work caps (CLI exit code 3).
class NumericalError : public Error {
  public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

class NonConvergenceError : public NumericalError {
  public:
    NonConvergenceError(const std::string& msg, double residual)
        : NumericalError(msg), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

/// Raised when an integrand or kernel evaluates to inf/nan at (u, v, t).
class NonFiniteError : public NumericalError {
  public:
    NonFiniteError(const std::string& msg, double u, double v, double t)
        : NumericalError(msg), u_(u), v_(v), t_(t) {}
    double u() const { return u_; }
    double v() const { return v_; }
    double t() const { return t_; }

  private:
    double u_, v_, t_;
};

class CapExceededError : public NumericalError {
  public:
    explicit CapExceededError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace oscidecay
