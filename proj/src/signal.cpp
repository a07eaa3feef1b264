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

#include "sicsim/signal.hpp"

#include "sicsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sicsim {

double mean_power(std::span<const cplx> x)
{
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

double mean_power(const ComplexSignal& x) { return mean_power(std::span<const cplx>(x.samples)); }

double to_db(double power) { return power > 1e-40 ? 10.0 * std::log10(power) : -400.0; }

double from_db(double db) { return std::pow(10.0, db / 10.0); }

void require_valid(const ComplexSignal& x, std::string_view what)
{
    if (x.empty()) throw ArgumentError(std::string(what) + " must not be empty");
    for (const auto& v : x.samples)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ArgumentError(std::string(what) + " contains non-finite samples");
}

ComplexSignal slice(const ComplexSignal& x, std::size_t begin, std::size_t end)
{
    if (begin > end || end > x.size()) throw ArgumentError("slice range out of bounds");
    return ComplexSignal(std::vector<cplx>(x.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                                           x.samples.begin() + static_cast<std::ptrdiff_t>(end)),
                         x.sample_rate_hz);
}

std::vector<double> kaiser_window(std::size_t n, double beta)
{
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    const double half = 0.5 * static_cast<double>(n - 1);
    const double norm = std::cyl_bessel_i(0.0, beta);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (static_cast<double>(i) - half) / half;
        w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    }
    return w;
}

} // namespace sicsim
