// SPDX-License-Identifier: Apache-2.0
//
// sicsim - full-duplex self-interference cancellation simulator
// Copyright (C) 2026 The sicsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sicsim {

// Invalid configuration value; field() names the offending key path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Scenario file that is not well-formed JSON.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error(message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Adaptive weights left the finite region.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rank-deficient regression basis; columns() holds dependent column indices.
class DegeneracyError : public std::runtime_error {
public:
    DegeneracyError(std::vector<std::size_t> columns, const std::string& message)
        : std::runtime_error(message), columns_(std::move(columns)) {}
    const std::vector<std::size_t>& columns() const noexcept { return columns_; }

private:
    std::vector<std::size_t> columns_;
};

} // namespace sicsim
