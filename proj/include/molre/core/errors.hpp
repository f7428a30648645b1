// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy. The CLI maps each family onto a process exit code.

#pragma once

#include <stdexcept>
#include <string>

namespace molre {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing, malformed or unreadable data (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values during optimisation or evaluation (exit code 4).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace molre
