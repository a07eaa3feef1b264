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

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace sicsim {

// Parallel-Hammerstein PA: y = g * sum_p fir_p * psi_p(x).
struct PaModel {
    std::vector<int> orders;
    std::vector<std::vector<cplx>> branch_firs;
    double linear_gain_db = 0.0;
};

void validate(const PaModel& pa);

struct NonlinearPaSpec {
    double drive_dbfs = -12.0;
    double third_order_dbc = -15.0;
    double order_step_db = 6.0;
    int max_order = 11;
    double linear_gain_db = 24.0;
    std::vector<cplx> memory = {cplx(1.0, 0.0), std::polar(0.12, 0.9), std::polar(0.04, -0.5)};
};

// Branch p is scaled so that its output power at the given Gaussian drive sits
// third_order_dbc - (k-1)*order_step_db below the linear branch (k = (p-1)/2).
PaModel make_nonlinear_pa(const NonlinearPaSpec& spec);
PaModel make_linear_pa(double linear_gain_db, std::vector<cplx> memory);

ComplexSignal apply_pa(const ComplexSignal& x, const PaModel& pa);

// One delayed, complex-scaled copy. Delays are in (possibly fractional) samples.
struct PathComponent {
    double delay_samples = 0.0;
    cplx gain{};
};

struct SiChannelModel {
    PathComponent leakage;
    PathComponent reflection;
    std::vector<PathComponent> multipath;
    // -inf disables thermal noise.
    double rx_noise_floor_dbfs = -std::numeric_limits<double>::infinity();
};

void validate(const SiChannelModel& ch);

SiChannelModel default_channel();

// Half-length of the fractional-delay interpolator.
inline constexpr int fractional_half_length = 2;

// Interpolator taps h[k], k = -2..2, for a delay of frac in (0, 1).
std::array<double, 2 * fractional_half_length + 1> fractional_kernel(double frac);

// x delayed by d samples, zero filled at the head, same length as x.
// Integer delays are exact shifts.
ComplexSignal delay_signal(const ComplexSignal& x, double d);

ComplexSignal apply_si_channel(const ComplexSignal& pa_out, const SiChannelModel& ch);

ComplexSignal add_noise(const ComplexSignal& x, double floor_dbfs, std::uint64_t seed);

struct AdcConfig {
    int bits = 12;
    double full_scale = 0.1;
};

void validate(const AdcConfig& adc);

ComplexSignal quantize(const ComplexSignal& x, const AdcConfig& adc);

// Samples with at least one rail beyond full scale.
std::size_t count_clipped(const ComplexSignal& x, const AdcConfig& adc, std::size_t begin = 0,
                          std::size_t end = std::numeric_limits<std::size_t>::max());

} // namespace sicsim
