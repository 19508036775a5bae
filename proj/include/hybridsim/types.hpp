#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hybridsim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using CSparse = Eigen::SparseMatrix<Complex>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Unit phasor at `deg` degrees.
inline Complex polar_deg(double mag, double deg) { return std::polar(mag, deg * kPi / 180.0); }

// Error types. Everything the engines throw derives from SimulationError so
// callers can attach stage/time context without caring about the origin.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TopologyError : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class ConvergenceError : public SimulationError {
public:
    ConvergenceError(const std::string& what, double residual)
        : SimulationError(what + " (last residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace hybridsim
