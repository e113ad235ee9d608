#pragma once

#include <stdexcept>
#include <string>

namespace ftx {

// Invalid configuration: bad parameters, infeasible constants, unparseable input.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A finite-difference stencil left the node set.
class StencilError : public std::runtime_error {
public:
    explicit StencilError(const std::string& what) : std::runtime_error(what) {}
};

// A length scale fell below grid resolution (e.g. mollification radius < h).
class ResolutionError : public std::runtime_error {
public:
    explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/overflow inside an iteration.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// I/O failure while reading or writing artifacts.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ftx
