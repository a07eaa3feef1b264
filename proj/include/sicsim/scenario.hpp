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

#include "sicsim/analysis.hpp"
#include "sicsim/convergence.hpp"
#include "sicsim/digital_canceller.hpp"
#include "sicsim/impairments.hpp"
#include "sicsim/rf_canceller.hpp"
#include "sicsim/waveform.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sicsim {

inline constexpr int summary_schema_version = 1;

enum class EventField { reflection_gain, reflection_delay, multipath_set };

std::string to_string(EventField f);

struct ChannelEvent {
    std::size_t at_sample = 0;
    EventField field = EventField::reflection_gain;
    std::variant<cplx, double, std::vector<PathComponent>> value;
};

struct MeasurementConfig {
    // 0 selects the waveform bandwidth.
    double bandwidth_hz = 0.0;
    std::size_t settle_margin = 32768;
    std::size_t min_samples = 16384;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    std::size_t duration_samples = 524288;
    double carrier_hz = 2.46e9;
    WaveformConfig waveform;
    PaModel pa;
    SiChannelModel channel;
    RfCancellerState rf;
    DigitalCancellerConfig digital;
    bool compare_linear = true;
    AdcConfig adc;
    ConvergenceCriteria convergence;
    MeasurementConfig measurement;
    std::vector<ChannelEvent> events;
    std::filesystem::path output_dir;

    double measurement_bandwidth() const
    {
        return measurement.bandwidth_hz > 0.0 ? measurement.bandwidth_hz : waveform.bandwidth_hz;
    }
};

// Throws ConfigError naming the field.
void validate(const Scenario& s);

// Raw document; throws ParseError carrying the line number.
nlohmann::json parse_scenario_text(const std::string& text);

// Strict conversion: unknown keys and invalid values raise ConfigError.
Scenario scenario_from_json(const nlohmann::json& doc);

Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json load_scenario_json(const std::filesystem::path& path);

SiChannelModel apply_event(const SiChannelModel& ch, const ChannelEvent& ev);

struct EventMetrics {
    std::size_t at_sample = 0;
    EventField field = EventField::reflection_gain;
    std::optional<double> pre_event_residual_db;
    std::optional<double> spike_db;
    std::optional<std::size_t> samples_to_reconverge;
    std::optional<double> post_event_residual_db;
};

struct RunMetrics {
    bool rf_converged = false;
    std::optional<std::size_t> rf_convergence_samples;
    bool digital_converged = false;
    std::optional<std::size_t> digital_convergence_samples;
    bool converged = false;
    std::size_t measure_begin = 0;
    std::size_t measure_end = 0;
    double bandwidth_hz = 0.0;
    double sample_rate_hz = 0.0;

    // Band powers over the measurement window, dBFS.
    double tx_db = 0.0;
    double pa_output_db = 0.0;
    double canceller_input_db = 0.0;
    double rf_residual_db = 0.0;
    double digital_residual_db = 0.0;
    std::optional<double> digital_linear_residual_db;
    double noise_db = 0.0;
    double noise_floor_in_band_db = 0.0;

    // Time-domain powers over the measurement window, dBFS.
    double canceller_input_time_db = 0.0;
    double rf_residual_time_db = 0.0;
    double rf_ls_residual_time_db = 0.0;
    std::vector<cplx> rf_ls_weights;
    std::vector<cplx> rf_final_weights;

    std::size_t clipped_samples = 0;
    std::size_t clipped_in_measurement = 0;
    double dc_raw_condition = 0.0;
    double dc_ortho_condition = 0.0;
    std::vector<GearChange> gear_changes;
    std::vector<EventMetrics> events;
    std::vector<std::string> notes;

    double passive_suppression_db() const { return pa_output_db - canceller_input_db; }
    double rf_suppression_db() const { return canceller_input_db - rf_residual_db; }
    double digital_suppression_db() const { return rf_residual_db - digital_residual_db; }
    double total_suppression_db() const { return pa_output_db - digital_residual_db; }
};

struct RunArtifacts {
    RunMetrics metrics;
    nlohmann::json summary;
    std::vector<std::pair<std::string, Psd>> psds;
    WeightTrace rf_trace;
    std::vector<OriginalCoefficient> dc_coeffs;
    bool complete = true;

    int exit_code() const { return metrics.converged ? 0 : 4; }
};

struct RunOptions {
    bool quiet = true;
    // Forces the block-LS digital canceller regardless of the scenario mode.
    bool digital_oracle = false;
};

RunArtifacts run_scenario(const Scenario& s, const RunOptions& opts = {});

void write_artifacts(const RunArtifacts& a, const std::filesystem::path& dir);

// Summary for a run that stopped with an error; flagged incomplete.
nlohmann::json failure_summary(const Scenario& s, const std::string& error, int exit_code);

// Human-readable tables from a summary document.
std::string render_report(const nlohmann::json& summary);

} // namespace sicsim
