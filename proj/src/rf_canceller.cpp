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

#include "sicsim/rf_canceller.hpp"

#include "sicsim/errors.hpp"
#include "sicsim/impairments.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <sstream>

namespace sicsim {

namespace {

constexpr double divergence_limit = 1e6;

void check_buffers(const ComplexSignal& rx, std::span<const ComplexSignal> refs, std::size_t taps)
{
    require_valid(rx, "rf canceller rx");
    if (refs.size() != taps) throw ArgumentError("one reference per tap is required");
    for (const auto& r : refs)
        if (r.size() != rx.size()) throw ArgumentError("rx and references must have equal length");
}

} // namespace

void validate(const RfCancellerState& s)
{
    if (s.tap_delays.empty()) throw ConfigError("rf_canceller.tap_delays", "at least one tap is required");
    for (std::size_t i = 0; i < s.tap_delays.size(); ++i) {
        if (!std::isfinite(s.tap_delays[i]) || s.tap_delays[i] < 0.0)
            throw ConfigError("rf_canceller.tap_delays", "tap delays must be ≥ 0");
        if (i > 0 && !(s.tap_delays[i] > s.tap_delays[i - 1]))
            throw ConfigError("rf_canceller.tap_delays", "tap delays must be strictly increasing");
    }
    if (s.weights.size() != s.tap_delays.size())
        throw ConfigError("rf_canceller.weights", "weights must match tap_delays in length");
    for (const auto& w : s.weights)
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
            throw ConfigError("rf_canceller.weights", "weights must be finite");
    if (!(s.mu >= 0.0) || !std::isfinite(s.mu)) throw ConfigError("rf_canceller.mu", "mu must be ≥ 0");
    if (!(s.leakage_factor >= 0.0 && s.leakage_factor <= 1.0))
        throw ConfigError("rf_canceller.leakage_factor", "leakage_factor must be in [0, 1]");
    if (s.update_decimation == 0)
        throw ConfigError("rf_canceller.update_decimation", "update_decimation must be ≥ 1");
    if (!(s.power_time_constant >= 0.0))
        throw ConfigError("rf_canceller.power_time_constant", "power_time_constant must be ≥ 0");
    if (s.trace_interval == 0) throw ConfigError("rf_canceller.trace_interval", "trace_interval must be ≥ 1");
    if (s.gear) {
        if (!(s.gear->tracking_mu >= 0.0)) throw ConfigError("rf_canceller.tracking_mu", "tracking_mu must be ≥ 0");
        if (s.gear->window == 0) throw ConfigError("rf_canceller.gear_window", "gear_window must be ≥ 1");
        if (!(s.gear->settle_db > 0.0)) throw ConfigError("rf_canceller.settle_db", "settle_db must be > 0");
        if (!(s.gear->reacquire_db > 0.0))
            throw ConfigError("rf_canceller.reacquire_db", "reacquire_db must be > 0");
    }
}

void WeightTrace::write_csv(std::ostream& os) const
{
    os << "sample_index,tap_index,re,im,residual_power_db\n";
    std::ostringstream line;
    line.precision(17);
    for (const auto& s : snapshots)
        for (std::size_t k = 0; k < s.weights.size(); ++k) {
            line.str("");
            line << s.sample_index << ',' << k << ',' << s.weights[k].real() << ',' << s.weights[k].imag() << ','
                 << s.residual_power_db << '\n';
            os << line.str();
        }
}

std::vector<ComplexSignal> tap_references(const ComplexSignal& pa_out, std::span<const double> delays)
{
    require_valid(pa_out, "tap_references input");
    std::vector<ComplexSignal> refs;
    refs.reserve(delays.size());
    for (double d : delays) refs.push_back(delay_signal(pa_out, d));
    return refs;
}

RfCanceller::RfCanceller(const ComplexSignal& rx, std::span<const ComplexSignal> refs, RfCancellerState state)
    : rx_(rx), refs_(refs), state_(std::move(state))
{
    validate(state_);
    check_buffers(rx_, refs_, state_.tap_delays.size());
    residual_.assign(rx_.size(), cplx{});
    power_acc_.assign(refs_.size(), 0.0);
    alpha_ = state_.power_time_constant > 0.0 ? 1.0 / state_.power_time_constant : 0.0;
}

void RfCanceller::gear_window_done(double power_db, std::size_t n)
{
    const auto& g = *state_.gear;
    if (!tracking_) {
        if (gear_prev_db_ && std::abs(power_db - *gear_prev_db_) < g.settle_db) {
            tracking_ = true;
            gear_ref_db_ = power_db;
            gear_changes_.push_back({n, true});
        }
    } else if (power_db > gear_ref_db_ + g.reacquire_db) {
        tracking_ = false;
        gear_changes_.push_back({n, false});
    } else {
        gear_ref_db_ = std::min(gear_ref_db_, power_db);
    }
    gear_prev_db_ = power_db;
}

void RfCanceller::advance(std::size_t count)
{
    const std::size_t taps = refs_.size();
    const std::size_t end = std::min(rx_.size(), pos_ + count);
    auto& w = state_.weights;
    const std::size_t delay = state_.loop_delay;
    for (std::size_t n = pos_; n < end; ++n) {
        cplx y{};
        for (std::size_t k = 0; k < taps; ++k) y += w[k] * refs_[k][n];
        const cplx e = rx_[n] - y;
        residual_[n] = e;

        if (alpha_ > 0.0) {
            decay_ *= 1.0 - alpha_;
            for (std::size_t k = 0; k < taps; ++k)
                power_acc_[k] = (1.0 - alpha_) * power_acc_[k] + alpha_ * std::norm(refs_[k][n]);
        }

        if (n >= delay && (n - delay) % state_.update_decimation == 0) {
            const std::size_t m = n - delay;
            const double mu = tracking_ ? state_.gear->tracking_mu : state_.mu;
            const cplx ed = residual_[m];
            for (std::size_t k = 0; k < taps; ++k) {
                double step = mu;
                if (alpha_ > 0.0) step /= power_acc_[k] / (1.0 - decay_) + 1e-30;
                w[k] = state_.leakage_factor * w[k] + step * ed * std::conj(refs_[k][m]);
                if (!(std::abs(w[k]) <= divergence_limit)) {
                    std::ostringstream msg;
                    msg << "RF canceller diverged at sample " << n << " (|w| > 1e6) with mu = " << mu;
                    throw DivergenceError(msg.str());
                }
            }
        }

        const double pe = std::norm(e);
        trace_acc_ += pe;
        if (++trace_count_ == state_.trace_interval) {
            trace_.snapshots.push_back({n + 1, w, to_db(trace_acc_ / static_cast<double>(trace_count_)), tracking_});
            trace_acc_ = 0.0;
            trace_count_ = 0;
        }
        if (state_.gear) {
            gear_acc_ += pe;
            if (++gear_count_ == state_.gear->window) {
                gear_window_done(to_db(gear_acc_ / static_cast<double>(gear_count_)), n + 1);
                gear_acc_ = 0.0;
                gear_count_ = 0;
            }
        }
    }
    pos_ = end;
}

ComplexSignal RfCanceller::take_residual() { return ComplexSignal(std::move(residual_), rx_.sample_rate_hz); }

RfRunResult rf_cancel_run(const ComplexSignal& rx, std::span<const ComplexSignal> refs, RfCancellerState& state)
{
    RfCanceller c(rx, refs, state);
    c.advance(rx.size());
    state.weights = c.state().weights;
    RfRunResult out;
    out.trace = c.trace();
    out.gear_changes = c.gear_changes();
    out.residual = c.take_residual();
    return out;
}

ConvergenceReport converge(const ComplexSignal& rx, std::span<const ComplexSignal> refs, RfCancellerState& state,
                           const ConvergenceCriteria& criteria)
{
    validate(criteria);
    RfCanceller c(rx, refs, state);
    const std::size_t limit = std::min(criteria.max_samples, rx.size());
    ConvergenceReport rep;
    rep.is_static = state.mu == 0.0 && (!state.gear || state.gear->tracking_mu == 0.0);

    std::vector<double> powers;
    while (c.position() + criteria.window <= limit) {
        const std::size_t begin = c.position();
        c.advance(criteria.window);
        powers.push_back(to_db(mean_power(std::span<const cplx>(c.residual()).subspan(begin, criteria.window))));
        if (!rep.is_static && powers.size() >= 2 &&
            std::abs(powers.back() - powers[powers.size() - 2]) < criteria.epsilon_db) {
            rep.converged = true;
            rep.samples_to_convergence = c.position();
            break;
        }
    }
    if (c.position() < limit && !rep.converged) c.advance(limit - c.position());
    rep.samples_run = c.position();
    rep.final_weights = c.state().weights;
    rep.residual_power_db = powers.empty()
                                ? to_db(mean_power(std::span<const cplx>(c.residual()).first(c.position())))
                                : powers.back();

    if (rep.is_static && rep.samples_run > refs.size()) {
        const auto ls = rf_block_ls(rx, refs, 0, rep.samples_run);
        const double own = to_db(mean_power(std::span<const cplx>(c.residual()).first(rep.samples_run)));
        rep.converged = own <= ls.residual_power_db + criteria.epsilon_db;
        if (rep.converged) rep.samples_to_convergence = 0;
    }
    state.weights = rep.final_weights;
    return rep;
}

RfLsSolution rf_block_ls(const ComplexSignal& rx, std::span<const ComplexSignal> refs, std::size_t begin,
                         std::size_t end)
{
    if (refs.empty()) throw ArgumentError("rf_block_ls needs at least one reference");
    for (const auto& r : refs)
        if (r.size() != rx.size()) throw ArgumentError("rx and references must have equal length");
    if (end > rx.size() || begin >= end || end - begin <= refs.size())
        throw ArgumentError("rf_block_ls range must hold more samples than taps");
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const auto cols = static_cast<Eigen::Index>(refs.size());
    Eigen::MatrixXcd a(rows, cols);
    Eigen::VectorXcd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const std::size_t n = begin + static_cast<std::size_t>(i);
        b(i) = rx[n];
        for (Eigen::Index k = 0; k < cols; ++k) a(i, k) = refs[static_cast<std::size_t>(k)][n];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
    const Eigen::VectorXcd w = qr.solve(b);
    const Eigen::VectorXcd r = b - a * w;
    RfLsSolution out;
    out.weights.assign(w.data(), w.data() + w.size());
    out.residual_power_db = to_db(r.squaredNorm() / static_cast<double>(rows));
    return out;
}

} // namespace sicsim
