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

#include <cstdint>
#include <string>

namespace sicsim {

enum class Constellation { qpsk, qam16, qam64 };

std::string to_string(Constellation c);
Constellation constellation_from_string(const std::string& name);

// CP-OFDM frame parameters. Active subcarriers sit symmetrically around an
// unused DC bin; the frame is low-pass shaped to the occupied band.
struct WaveformConfig {
    double bandwidth_hz = 20e6;
    double sample_rate_hz = 30.72e6;
    int num_subcarriers = 1024;
    int active_subcarriers = 650;
    int cp_len = 72;
    int num_symbols = 14;
    Constellation constellation = Constellation::qam16;
    std::uint64_t seed = 1;
    double tx_power_dbfs = -12.0;
    bool shaping = true;
    // Clip-and-filter crest factor target in dB above the mean amplitude;
    // 0 disables it. Requires shaping.
    double crest_factor_db = 0.0;
};

// Throws ConfigError naming the first violated field.
void validate(const WaveformConfig& cfg);

// 20/40/80 MHz presets sharing one subcarrier spacing.
WaveformConfig default_waveform(double bandwidth_hz);

// Samples per OFDM symbol including the cyclic prefix.
inline std::size_t symbol_length(const WaveformConfig& cfg)
{
    return static_cast<std::size_t>(cfg.num_subcarriers + cfg.cp_len);
}

ComplexSignal generate_frame(const WaveformConfig& cfg);

// Linear-phase low-pass FIR used to contain the frame spectrum.
std::vector<double> shaping_filter(const WaveformConfig& cfg);

double measure_papr(const ComplexSignal& sig);

} // namespace sicsim
