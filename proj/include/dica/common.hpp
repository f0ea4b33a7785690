#pragma once

#include <stdexcept>
#include <string>

namespace dica {

/// Base class for all library errors. `kind()` is a stable, machine-readable
/// tag used by the CLI to classify failures.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Malformed or inconsistent data passed to an operation.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error("input", what) {}
};

/// Invalid configuration (hyperparameters, empty grids, bad flags).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// CSV or JSON that could not be parsed; carries the 1-based row number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long row)
        : Error("parse", what + " (row " + std::to_string(row) + ")"), row_(row) {}

    [[nodiscard]] long row() const noexcept { return row_; }

private:
    long row_;
};

/// A matrix required to be positive definite failed a Cholesky pivot.
class DefinitenessError : public Error {
public:
    DefinitenessError(const std::string& what, long pivot)
        : Error("definiteness", what + " (pivot " + std::to_string(pivot) + ")"),
          pivot_(pivot) {}

    [[nodiscard]] long pivot() const noexcept { return pivot_; }

private:
    long pivot_;
};

/// The spectrum of a matrix expected to be (numerically) real contained
/// imaginary parts above tolerance.
class SpectrumError : public Error {
public:
    SpectrumError(const std::string& what, double max_imag)
        : Error("spectrum", what + " (max_imag=" + std::to_string(max_imag) + ")"),
          max_imag_(max_imag) {}

    [[nodiscard]] double max_imag() const noexcept { return max_imag_; }

private:
    double max_imag_;
};

/// A direction with nonpositive quadratic form under a PD metric.
class DegenerateDirectionError : public Error {
public:
    explicit DegenerateDirectionError(const std::string& what)
        : Error("degenerate-direction", what) {}
};

/// I/O failure with path context.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace dica
