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

#include "sicsim/convergence.hpp"

#include "sicsim/errors.hpp"

#include <cmath>

namespace sicsim {

void validate(const ConvergenceCriteria& c)
{
    if (c.window == 0) throw ConfigError("convergence.window", "convergence window must be > 0");
    if (!(c.epsilon_db > 0.0)) throw ConfigError("convergence.epsilon_db", "epsilon_db must be > 0");
    if (c.max_samples == 0) throw ConfigError("convergence.max_samples", "max_samples must be > 0");
}

std::vector<double> window_powers_db(std::span<const cplx> x, std::size_t window)
{
    if (window == 0) throw ArgumentError("window must be > 0");
    std::vector<double> out;
    for (std::size_t b = 0; b + window <= x.size(); b += window)
        out.push_back(to_db(mean_power(x.subspan(b, window))));
    return out;
}

std::optional<std::size_t> settle_window(std::span<const double> powers_db, double epsilon_db, std::size_t first)
{
    for (std::size_t i = first + 1; i < powers_db.size(); ++i)
        if (std::abs(powers_db[i] - powers_db[i - 1]) < epsilon_db) return i;
    return std::nullopt;
}

} // namespace sicsim
