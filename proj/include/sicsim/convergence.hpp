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

#include "sicsim/signal.hpp"

#include <optional>

namespace sicsim {

// Shared steady-state rule: converged once the mean power of two consecutive
// windows differs by less than epsilon_db.
struct ConvergenceCriteria {
    std::size_t window = 2048;
    double epsilon_db = 0.2;
    std::size_t max_samples = std::size_t{1} << 21;
};

void validate(const ConvergenceCriteria& c);

// Mean power in dB of each complete window of x.
std::vector<double> window_powers_db(std::span<const cplx> x, std::size_t window);

// First window index i > first with |p[i] - p[i-1]| < epsilon_db.
std::optional<std::size_t> settle_window(std::span<const double> powers_db, double epsilon_db,
                                         std::size_t first = 0);

} // namespace sicsim
