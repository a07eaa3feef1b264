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

#include <iosfwd>
#include <string>
#include <vector>

namespace sicsim {

enum class Window { hann, hamming, blackman, rectangular };

Window window_from_string(const std::string& name);

// Two-sided density in power per Hz, ascending frequency around 0 Hz.
// Summing density * bin_width_hz gives the mean power of the signal.
struct Psd {
    std::vector<double> freqs_hz;
    std::vector<double> density;
    double bin_width_hz = 0.0;

    std::vector<double> density_db() const;
    // Power of bins with lo_hz <= f <= hi_hz.
    double integrate(double lo_hz, double hi_hz) const;
    // Columns: freq_hz, density_db.
    void write_csv(std::ostream& os) const;
};

inline constexpr std::size_t default_segment = 4096;
inline constexpr double default_overlap = 0.5;

Psd welch_psd(const ComplexSignal& x, std::size_t seg_len = default_segment, double overlap = default_overlap,
              Window window = Window::hann);

// Default Welch settings with the segment clamped to the signal length.
Psd default_psd(const ComplexSignal& x);

double band_power(const Psd& psd, double bw_hz);
double band_power(const ComplexSignal& x, double bw_hz);

// Smallest symmetric band holding the given share of the total power.
double occupied_bandwidth(const Psd& psd, double fraction = 0.99);

struct StageReport {
    std::string stage_name;
    double band_power_db = 0.0;
    Psd psd;
    double suppression_vs_prev_db = 0.0;
};

struct NamedSignal {
    std::string name;
    ComplexSignal signal;
};

std::vector<StageReport> suppression_chain(std::span<const NamedSignal> stages, double bw_hz);

// Arithmetic core of suppression_chain on precomputed band powers.
std::vector<StageReport> suppression_from_powers(std::span<const std::string> names, std::span<const double> powers_db);

double total_suppression(std::span<const StageReport> reports);

} // namespace sicsim
