// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cpsim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Zero-delay cycle (or a cycle with too few initial samples) in a dataflow cluster.
class AlgebraicLoop : public Error {
public:
    using Error::Error;
};

/// Rate balance equations have no positive integer solution.
class RateInconsistency : public Error {
public:
    using Error::Error;
};

/// Structural error in a cluster or netlist (dangling port, unknown node, bad value).
class ModelError : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

/// A processing function or solver step failed mid-run.
class SimulationAbort : public Error {
public:
    SimulationAbort(std::string where, double time, const std::string& what)
        : Error(where + " @ t=" + std::to_string(time) + "s: " + what),
          where_(std::move(where)),
          time_(time) {}

    const std::string& where() const noexcept { return where_; }
    double time() const noexcept { return time_; }

private:
    std::string where_;
    double time_;
};

class VsdTooSmall : public Error {
public:
    using Error::Error;
};

class MalformedFrame : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, std::string key)
        : Error(what), line_(line), key_(std::move(key)) {}

    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& why)
        : Error("invalid value for '" + field + "': " + why), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace cpsim
