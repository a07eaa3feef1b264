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

#include "sicsim/analysis.hpp"
#include "sicsim/errors.hpp"
#include "sicsim/waveform.hpp"

#include <doctest.h>

using namespace sicsim;

namespace {

std::string config_error_message(const WaveformConfig& cfg, std::string* field = nullptr)
{
    try {
        validate(cfg);
    } catch (const ConfigError& e) {
        if (field) *field = e.field();
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("zero symbols is rejected")
{
    WaveformConfig cfg;
    cfg.num_symbols = 0;
    std::string field;
    CHECK(config_error_message(cfg, &field) == "num_symbols must be ≥ 1");
    CHECK(field == "num_symbols");
    CHECK_THROWS_AS(generate_frame(cfg), ConfigError);
}

TEST_CASE("waveform invariants name the offending field")
{
    std::string field;
    WaveformConfig cfg;
    cfg.sample_rate_hz = 25e6;
    CHECK_FALSE(config_error_message(cfg, &field).empty());
    CHECK(field == "sample_rate_hz");

    cfg = {};
    cfg.active_subcarriers = cfg.num_subcarriers;
    CHECK_FALSE(config_error_message(cfg, &field).empty());
    CHECK(field == "active_subcarriers");

    cfg = {};
    cfg.cp_len = -1;
    CHECK_FALSE(config_error_message(cfg, &field).empty());
    CHECK(field == "cp_len");

    cfg = {};
    cfg.cp_len = cfg.num_subcarriers;
    CHECK_FALSE(config_error_message(cfg, &field).empty());
    CHECK(field == "cp_len");

    cfg = {};
    cfg.shaping = false;
    cfg.crest_factor_db = 9.0;
    CHECK_FALSE(config_error_message(cfg, &field).empty());
    CHECK(field == "crest_factor_db");
}

TEST_CASE("constellation names round trip")
{
    for (auto c : {Constellation::qpsk, Constellation::qam16, Constellation::qam64})
        CHECK(constellation_from_string(to_string(c)) == c);
    CHECK_THROWS_AS(constellation_from_string("QAM256"), ConfigError);
}

TEST_CASE("presets share one subcarrier spacing")
{
    for (double bw : {20e6, 40e6, 80e6}) {
        const auto cfg = default_waveform(bw);
        CHECK_NOTHROW(validate(cfg));
        CHECK(cfg.sample_rate_hz / cfg.num_subcarriers == doctest::Approx(30e3));
        CHECK(cfg.sample_rate_hz == doctest::Approx(1.536 * bw));
    }
}

TEST_CASE("same seed gives a bit-identical frame")
{
    WaveformConfig cfg;
    cfg.seed = 42;
    const auto a = generate_frame(cfg);
    const auto b = generate_frame(cfg);
    CHECK(a.samples == b.samples);
    cfg.seed = 43;
    CHECK(generate_frame(cfg).samples != a.samples);
}

TEST_CASE("frame length and power normalization")
{
    WaveformConfig cfg;
    cfg.tx_power_dbfs = -12.0;
    for (auto c : {Constellation::qpsk, Constellation::qam16, Constellation::qam64}) {
        cfg.constellation = c;
        const auto x = generate_frame(cfg);
        CHECK(x.size() == symbol_length(cfg) * cfg.num_symbols);
        CHECK(x.sample_rate_hz == cfg.sample_rate_hz);
        CHECK(std::abs(to_db(mean_power(x)) + 12.0) <= 0.1);
    }
}

TEST_CASE("600 of 1024 subcarriers occupy about 18 MHz")
{
    WaveformConfig cfg;
    cfg.active_subcarriers = 600;
    cfg.bandwidth_hz = 18e6;
    cfg.num_symbols = 64;
    const auto x = generate_frame(cfg);
    const double obw = occupied_bandwidth(welch_psd(x, 4096, 0.5, Window::hann));
    CHECK(obw == doctest::Approx(18e6).epsilon(0.10));
}

TEST_CASE("occupied bandwidth of the presets is within 10 percent")
{
    for (double bw : {20e6, 40e6, 80e6}) {
        auto cfg = default_waveform(bw);
        cfg.num_symbols = 24;
        const double obw = occupied_bandwidth(welch_psd(generate_frame(cfg)));
        CHECK(obw == doctest::Approx(bw).epsilon(0.10));
    }
}

TEST_CASE("spectrum outside the occupied band is at least 20 dB down")
{
    for (double cf : {0.0, 9.0}) {
        WaveformConfig cfg;
        cfg.num_symbols = 64;
        cfg.crest_factor_db = cf;
        const auto psd = welch_psd(generate_frame(cfg));
        double in_band = 0.0, out_max = 0.0;
        std::size_t in_count = 0;
        for (std::size_t i = 0; i < psd.freqs_hz.size(); ++i) {
            if (std::abs(psd.freqs_hz[i]) <= cfg.bandwidth_hz / 2) {
                in_band += psd.density[i];
                ++in_count;
            } else {
                out_max = std::max(out_max, psd.density[i]);
            }
        }
        in_band /= double(in_count);
        CHECK(to_db(out_max) <= to_db(in_band) - 20.0);
    }
}

TEST_CASE("papr closed forms")
{
    CHECK(measure_papr(ComplexSignal({cplx(1, 0), cplx(0, 1), cplx(-1, 0)}, 1.0)) == doctest::Approx(0.0));
    CHECK(measure_papr(ComplexSignal({cplx(1, 0), 0, 0, 0}, 1.0)) == doctest::Approx(10 * std::log10(4.0)));
    CHECK_THROWS_AS(measure_papr(ComplexSignal({}, 1.0)), ArgumentError);
    CHECK_THROWS_AS(measure_papr(ComplexSignal({0, 0}, 1.0)), ArgumentError);
}

TEST_CASE("ofdm papr falls between 8 and 13 dB")
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        WaveformConfig cfg;
        cfg.seed = seed;
        const double papr = measure_papr(generate_frame(cfg));
        CHECK(papr >= 8.0);
        CHECK(papr <= 13.0);
    }
}

TEST_CASE("crest factor control lowers the papr")
{
    WaveformConfig cfg;
    cfg.num_symbols = 32;
    const double natural = measure_papr(generate_frame(cfg));
    cfg.crest_factor_db = 9.0;
    const double limited = measure_papr(generate_frame(cfg));
    CHECK(limited < natural);
    CHECK(limited < 10.0);
}

TEST_CASE("complex scaling scales power and keeps papr")
{
    const auto x = generate_frame(WaveformConfig{});
    const cplx c = std::polar(0.3, 1.1);
    ComplexSignal y = x;
    for (auto& v : y.samples) v *= c;
    CHECK(mean_power(y) == doctest::Approx(std::norm(c) * mean_power(x)).epsilon(1e-12));
    CHECK(measure_papr(y) == doctest::Approx(measure_papr(x)).epsilon(1e-12));
}

TEST_CASE("shaping filter has unit dc gain and linear phase")
{
    const auto h = shaping_filter(WaveformConfig{});
    double dc = 0.0;
    for (double v : h) dc += v;
    CHECK(dc == doctest::Approx(1.0));
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(h[h.size() - 1 - i]));
}
