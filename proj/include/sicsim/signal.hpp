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

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace sicsim {

using cplx = std::complex<double>;

// Uniformly sampled complex baseband. 0 dBFS is unit mean power.
struct ComplexSignal {
    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;

    ComplexSignal() = default;
    ComplexSignal(std::vector<cplx> s, double fs) : samples(std::move(s)), sample_rate_hz(fs) {}

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    cplx& operator[](std::size_t i) { return samples[i]; }
    const cplx& operator[](std::size_t i) const { return samples[i]; }
};

double mean_power(std::span<const cplx> x);
double mean_power(const ComplexSignal& x);

// 10*log10 with a -400 dB floor so zero power stays finite.
double to_db(double power);
double from_db(double db);

// Throws ArgumentError if the signal is empty or holds non-finite samples.
void require_valid(const ComplexSignal& x, std::string_view what);

ComplexSignal slice(const ComplexSignal& x, std::size_t begin, std::size_t end);

// Symmetric Kaiser window of n points.
std::vector<double> kaiser_window(std::size_t n, double beta);

inline double sinc(double x)
{
    constexpr double pi = 3.14159265358979323846;
    return x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x);
}

// Order-p odd basis nonlinearity |x|^(p-1) x.
inline cplx odd_power(cplx x, int order)
{
    const double m2 = std::norm(x);
    double g = 1.0;
    for (int k = 1; k < order; k += 2) g *= m2;
    return g * x;
}

} // namespace sicsim
