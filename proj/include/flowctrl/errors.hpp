// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace flowctrl {

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SymmetryError : std::runtime_error {
    explicit SymmetryError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotSpdError : std::runtime_error {
    explicit NotSpdError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularError : std::runtime_error {
    explicit SingularError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FactorizationError : std::runtime_error {
    explicit FactorizationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PreconditionerError : std::runtime_error {
    explicit PreconditionerError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CapError : std::runtime_error {
    explicit CapError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonConvergence : std::runtime_error {
    explicit NonConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace flowctrl
