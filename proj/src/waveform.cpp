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

#include "sicsim/waveform.hpp"

#include "sicsim/errors.hpp"
#include "sicsim/fft.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sicsim {

namespace {

constexpr std::size_t shaping_taps = 129;
constexpr double shaping_beta = 7.0;
constexpr double shaping_edge = 1.06;
constexpr int crest_passes = 3;

std::vector<cplx> filter_centered(const std::vector<cplx>& x, const std::vector<double>& h)
{
    const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    std::vector<cplx> out(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        cplx acc{};
        const std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(0, i + half - n + 1);
        const std::ptrdiff_t k1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h.size()) - 1, i + half);
        for (std::ptrdiff_t k = k0; k <= k1; ++k) acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(i + half - k)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

std::vector<double> constellation_levels(Constellation c)
{
    switch (c) {
    case Constellation::qpsk: return {-1.0, 1.0};
    case Constellation::qam16: return {-3.0, -1.0, 1.0, 3.0};
    case Constellation::qam64: return {-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0};
    }
    return {};
}

void fail(const char* field, const std::string& msg) { throw ConfigError(field, msg); }

} // namespace

std::string to_string(Constellation c)
{
    switch (c) {
    case Constellation::qpsk: return "QPSK";
    case Constellation::qam16: return "QAM16";
    case Constellation::qam64: return "QAM64";
    }
    return "?";
}

Constellation constellation_from_string(const std::string& name)
{
    if (name == "QPSK") return Constellation::qpsk;
    if (name == "QAM16") return Constellation::qam16;
    if (name == "QAM64") return Constellation::qam64;
    throw ConfigError("constellation", "constellation must be one of QPSK, QAM16, QAM64");
}

void validate(const WaveformConfig& cfg)
{
    if (!(cfg.bandwidth_hz > 0.0)) fail("bandwidth_hz", "bandwidth_hz must be > 0");
    if (!(cfg.sample_rate_hz >= 1.5 * cfg.bandwidth_hz))
        fail("sample_rate_hz", "sample_rate_hz must be ≥ 1.5 × bandwidth_hz");
    if (cfg.num_subcarriers < 2) fail("num_subcarriers", "num_subcarriers must be ≥ 2");
    if (cfg.active_subcarriers < 1 || cfg.active_subcarriers >= cfg.num_subcarriers)
        fail("active_subcarriers", "active_subcarriers must be in [1, num_subcarriers)");
    const double occupied = cfg.active_subcarriers * cfg.sample_rate_hz / cfg.num_subcarriers;
    if (std::abs(occupied / cfg.bandwidth_hz - 1.0) > 0.1)
        fail("active_subcarriers", "active_subcarriers must span bandwidth_hz within ±10%");
    if (cfg.cp_len < 0 || cfg.cp_len >= cfg.num_subcarriers)
        fail("cp_len", "cp_len must be in [0, num_subcarriers)");
    if (cfg.num_symbols < 1) fail("num_symbols", "num_symbols must be ≥ 1");
    if (!(cfg.crest_factor_db >= 0.0) || (cfg.crest_factor_db > 0.0 && !cfg.shaping))
        fail("crest_factor_db", "crest_factor_db must be ≥ 0 and needs shaping");
    if (!std::isfinite(cfg.tx_power_dbfs) || cfg.tx_power_dbfs > 0.0)
        fail("tx_power_dbfs", "tx_power_dbfs must be finite and ≤ 0");
}

WaveformConfig default_waveform(double bandwidth_hz)
{
    WaveformConfig cfg;
    const double scale = bandwidth_hz / 20e6;
    if (scale != 1.0 && scale != 2.0 && scale != 4.0)
        throw ConfigError("bandwidth_hz", "presets exist for 20, 40 and 80 MHz only");
    const int k = static_cast<int>(scale);
    cfg.bandwidth_hz = bandwidth_hz;
    cfg.sample_rate_hz = 30.72e6 * k;
    cfg.num_subcarriers = 1024 * k;
    cfg.active_subcarriers = 650 * k;
    cfg.cp_len = 72 * k;
    return cfg;
}

std::vector<double> shaping_filter(const WaveformConfig& cfg)
{
    const double fc = std::min(shaping_edge * 0.5 * cfg.bandwidth_hz, 0.49 * cfg.sample_rate_hz);
    const double cut = 2.0 * fc / cfg.sample_rate_hz;
    const auto w = kaiser_window(shaping_taps, shaping_beta);
    const double mid = 0.5 * static_cast<double>(shaping_taps - 1);
    std::vector<double> h(shaping_taps);
    double dc = 0.0;
    for (std::size_t i = 0; i < shaping_taps; ++i) {
        h[i] = cut * sinc(cut * (static_cast<double>(i) - mid)) * w[i];
        dc += h[i];
    }
    for (auto& v : h) v /= dc;
    return h;
}

ComplexSignal generate_frame(const WaveformConfig& cfg)
{
    validate(cfg);
    const auto n = static_cast<std::size_t>(cfg.num_subcarriers);
    const auto cp = static_cast<std::size_t>(cfg.cp_len);
    const auto pos = static_cast<std::size_t>((cfg.active_subcarriers + 1) / 2);
    const auto neg = static_cast<std::size_t>(cfg.active_subcarriers / 2);
    const auto levels = constellation_levels(cfg.constellation);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, levels.size() - 1);
    Fft ifft(n, Fft::Direction::inverse);

    std::vector<cplx> frame;
    frame.reserve(static_cast<std::size_t>(cfg.num_symbols) * (n + cp));
    std::vector<cplx> bins(n), symbol(n);
    for (int s = 0; s < cfg.num_symbols; ++s) {
        std::fill(bins.begin(), bins.end(), cplx{});
        for (std::size_t k = 1; k <= pos; ++k) bins[k] = {levels[pick(rng)], levels[pick(rng)]};
        for (std::size_t k = n - neg; k < n; ++k) bins[k] = {levels[pick(rng)], levels[pick(rng)]};
        ifft.execute(bins, symbol);
        frame.insert(frame.end(), symbol.end() - static_cast<std::ptrdiff_t>(cp), symbol.end());
        frame.insert(frame.end(), symbol.begin(), symbol.end());
    }

    if (cfg.shaping) {
        const auto h = shaping_filter(cfg);
        const int passes = cfg.crest_factor_db > 0.0 ? crest_passes : 0;
        for (int pass = 0; pass <= passes; ++pass) {
            if (pass > 0) {
                const double limit = std::sqrt(mean_power(frame) * from_db(cfg.crest_factor_db));
                for (auto& v : frame)
                    if (std::abs(v) > limit) v *= limit / std::abs(v);
            }
            frame = filter_centered(frame, h);
        }
    }

    const double scale = std::sqrt(from_db(cfg.tx_power_dbfs) / mean_power(frame));
    for (auto& v : frame) v *= scale;
    return ComplexSignal(std::move(frame), cfg.sample_rate_hz);
}

double measure_papr(const ComplexSignal& sig)
{
    if (sig.empty()) throw ArgumentError("measure_papr: signal must not be empty");
    double peak = 0.0;
    for (const auto& v : sig.samples) peak = std::max(peak, std::norm(v));
    const double mean = mean_power(sig);
    if (!(mean > 0.0)) throw ArgumentError("measure_papr: signal has zero power");
    return std::max(0.0, 10.0 * std::log10(peak / mean));
}

} // namespace sicsim
