#pragma once

#include <stdexcept>
#include <string>

namespace geoplast {

// scenario / input problems (CLI exit code 1)
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// solver non-convergence or objective increase (CLI exit code 2)
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

// file system / serialization problems (CLI exit code 1)
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace geoplast
