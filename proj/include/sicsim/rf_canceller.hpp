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

#include "sicsim/convergence.hpp"
#include "sicsim/signal.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace sicsim {

// Two-speed step control. The canceller drops to tracking_mu once the
// residual settles and returns to the acquisition mu when a window rises more
// than reacquire_db above the best tracked level.
struct GearShift {
    double tracking_mu = 5e-6;
    std::size_t window = 2048;
    double settle_db = 0.2;
    double reacquire_db = 6.0;
};

struct RfCancellerState {
    std::vector<double> tap_delays;
    std::vector<cplx> weights;
    double mu = 0.008;
    double leakage_factor = 1.0;
    std::size_t update_decimation = 1;
    std::size_t loop_delay = 8;
    // Time constant of the per-tap reference power estimate; 0 gives plain LMS.
    double power_time_constant = 512.0;
    std::optional<GearShift> gear;
    std::size_t trace_interval = 512;
};

void validate(const RfCancellerState& s);

struct WeightSnapshot {
    std::size_t sample_index = 0;
    std::vector<cplx> weights;
    double residual_power_db = 0.0;
    bool tracking = false;
};

struct WeightTrace {
    std::vector<WeightSnapshot> snapshots;

    // Columns: sample_index, tap_index, re, im, residual_power_db.
    void write_csv(std::ostream& os) const;
};

struct GearChange {
    std::size_t sample_index = 0;
    bool tracking = false;
};

std::vector<ComplexSignal> tap_references(const ComplexSignal& pa_out, std::span<const double> delays);

// Streaming closed-loop canceller over fixed rx/refs buffers. The buffers
// must outlive the object.
class RfCanceller {
public:
    RfCanceller(const ComplexSignal& rx, std::span<const ComplexSignal> refs, RfCancellerState state);

    // Processes the next count samples (clamped to the end of rx).
    void advance(std::size_t count);

    std::size_t position() const noexcept { return pos_; }
    const RfCancellerState& state() const noexcept { return state_; }
    const std::vector<cplx>& residual() const noexcept { return residual_; }
    const WeightTrace& trace() const noexcept { return trace_; }
    const std::vector<GearChange>& gear_changes() const noexcept { return gear_changes_; }
    bool tracking() const noexcept { return tracking_; }

    ComplexSignal take_residual();

private:
    void gear_window_done(double power_db, std::size_t n);

    const ComplexSignal& rx_;
    std::span<const ComplexSignal> refs_;
    RfCancellerState state_;
    std::vector<cplx> residual_;
    std::vector<double> power_acc_;
    double decay_ = 1.0;
    double alpha_ = 0.0;
    std::size_t pos_ = 0;
    WeightTrace trace_;
    double trace_acc_ = 0.0;
    std::size_t trace_count_ = 0;
    std::vector<GearChange> gear_changes_;
    bool tracking_ = false;
    double gear_acc_ = 0.0;
    std::size_t gear_count_ = 0;
    std::optional<double> gear_prev_db_;
    double gear_ref_db_ = 0.0;
};

struct RfRunResult {
    ComplexSignal residual;
    WeightTrace trace;
    std::vector<GearChange> gear_changes;
};

// Runs over the whole signal; state.weights holds the final weights afterwards.
RfRunResult rf_cancel_run(const ComplexSignal& rx, std::span<const ComplexSignal> refs, RfCancellerState& state);

struct ConvergenceReport {
    bool converged = false;
    // mu == 0 and no gear: weights never move.
    bool is_static = false;
    std::optional<std::size_t> samples_to_convergence;
    std::vector<cplx> final_weights;
    double residual_power_db = 0.0;
    std::size_t samples_run = 0;
};

ConvergenceReport converge(const ComplexSignal& rx, std::span<const ComplexSignal> refs, RfCancellerState& state,
                           const ConvergenceCriteria& criteria);

struct RfLsSolution {
    std::vector<cplx> weights;
    double residual_power_db = 0.0;
};

// Block least-squares oracle on samples [begin, end).
RfLsSolution rf_block_ls(const ComplexSignal& rx, std::span<const ComplexSignal> refs, std::size_t begin,
                         std::size_t end);

} // namespace sicsim
