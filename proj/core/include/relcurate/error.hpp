// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy shared by every relcurate module.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relcurate {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed record in a line-delimited file. `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A record parsed but broke a domain invariant. `id()` names the offender.
class ValidationError : public Error {
public:
    ValidationError(std::string id, const std::string& what)
        : Error(id + ": " + what), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class UnknownTokenError : public Error {
public:
    explicit UnknownTokenError(const std::string& token)
        : Error("unknown token '" + token + "'"), token_(token) {}
    const std::string& token() const noexcept { return token_; }

private:
    std::string token_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised by the pipeline; carries the failing stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace relcurate
