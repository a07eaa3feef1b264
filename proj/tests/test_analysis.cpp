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

#include "oracles.hpp"

#include "sicsim/analysis.hpp"
#include "sicsim/errors.hpp"
#include "sicsim/impairments.hpp"
#include "sicsim/waveform.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace sicsim;

namespace {

ComplexSignal tone(std::size_t n, double f, double amp, double fs)
{
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(amp, 2 * std::numbers::pi * f / fs * double(i));
    return {x, fs};
}

double total(const Psd& p)
{
    double s = 0.0;
    for (double d : p.density) s += d * p.bin_width_hz;
    return s;
}

std::size_t index_of(const Psd& p, double f)
{
    std::size_t best = 0;
    for (std::size_t i = 0; i < p.freqs_hz.size(); ++i)
        if (std::abs(p.freqs_hz[i] - f) < std::abs(p.freqs_hz[best] - f)) best = i;
    return best;
}

} // namespace

TEST_CASE("white noise psd integrates to its variance")
{
    const auto x = oracle::noise_signal(1000000, 1);
    const auto p = welch_psd(x);
    CHECK(std::abs(to_db(total(p)) - to_db(oracle::power(x.samples))) <= 0.1);
    CHECK(std::abs(to_db(total(p))) <= 0.1);
}

TEST_CASE("welch matches averaged naive dft periodograms")
{
    const std::size_t n = 1000, seg = 64;
    const auto x = oracle::noise_signal(n, 2, 1e6);
    for (auto [win, overlap] : {std::pair{Window::rectangular, 0.0}, std::pair{Window::hann, 0.5}}) {
        const auto p = welch_psd(x, seg, overlap, win);
        const std::size_t hop = std::size_t(double(seg) * (1 - overlap));
        std::vector<double> w(seg, 1.0);
        if (win == Window::hann)
            for (std::size_t i = 0; i < seg; ++i) w[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * double(i) / seg);
        double u = 0.0;
        for (double v : w) u += v * v;
        std::vector<double> acc(seg, 0.0);
        std::size_t count = 0;
        for (std::size_t b = 0; b + seg <= n; b += hop, ++count) {
            std::vector<cplx> s(seg);
            for (std::size_t i = 0; i < seg; ++i) s[i] = x[b + i] * w[i];
            const auto f = oracle::naive_dft(s);
            for (std::size_t k = 0; k < seg; ++k) acc[k] += std::norm(f[k]);
        }
        REQUIRE(p.density.size() == seg);
        for (std::size_t k = 0; k < seg; ++k) {
            // Ascending frequency: shift bin k to the two-sided grid.
            const std::size_t src = (k + seg / 2) % seg;
            const double ref = acc[src] / double(count) / (u * x.sample_rate_hz);
            CHECK(p.density[k] == doctest::Approx(ref).epsilon(1e-10));
        }
        CHECK(p.freqs_hz.front() == doctest::Approx(-x.sample_rate_hz / 2));
        CHECK(p.bin_width_hz == doctest::Approx(x.sample_rate_hz / seg));
    }
}

TEST_CASE("tone psd peaks at the tone frequency with the tone power")
{
    const double fs = 30.72e6, f0 = 3.3e6, amp = 0.5;
    const auto x = tone(1 << 16, f0, amp, fs);
    const auto p = welch_psd(x);
    const auto peak = std::max_element(p.density.begin(), p.density.end()) - p.density.begin();
    CHECK(std::abs(p.freqs_hz[std::size_t(peak)] - f0) <= p.bin_width_hz);
    // Complex tone: A^2 in total, A^2/2 on each rail.
    CHECK(std::abs(to_db(total(p)) - to_db(amp * amp)) <= 0.1);
    ComplexSignal re = x;
    for (auto& v : re.samples) v = v.real();
    CHECK(std::abs(to_db(total(welch_psd(re))) - to_db(amp * amp / 2)) <= 0.1);
}

TEST_CASE("welch argument checks")
{
    const auto x = oracle::noise_signal(100, 3);
    CHECK_THROWS_AS(welch_psd(x, 200), ArgumentError);
    CHECK_THROWS_AS(welch_psd(x, 50, 0.95), ArgumentError);
    CHECK_THROWS_AS(welch_psd(x, 50, -0.1), ArgumentError);
    CHECK(window_from_string("blackman") == Window::blackman);
    CHECK_THROWS_AS(window_from_string("kaiser"), ArgumentError);
}

TEST_CASE("pa output shows shoulder regrowth")
{
    auto cfg = default_waveform(20e6);
    cfg.num_symbols = 32;
    const auto x = generate_frame(cfg);
    const auto y = apply_pa(x, make_nonlinear_pa(NonlinearPaSpec{}));
    const auto px = welch_psd(x), py = welch_psd(y);
    const double inx = px.integrate(-10e6, 10e6), iny = py.integrate(-10e6, 10e6);
    const double shoulder_x = px.integrate(11e6, 14e6) / inx, shoulder_y = py.integrate(11e6, 14e6) / iny;
    CHECK(to_db(shoulder_y) > to_db(shoulder_x) + 10.0);
}

TEST_CASE("full band power of a white signal is its total power")
{
    const auto x = oracle::noise_signal(1 << 18, 4, 30.72e6, 0.2);
    CHECK(std::abs(band_power(x, x.sample_rate_hz) - to_db(oracle::power(x.samples))) <= 0.1);
    CHECK_THROWS_AS(band_power(x, 2 * x.sample_rate_hz), ArgumentError);
}

TEST_CASE("out-of-band tone leaks at most -60 dB")
{
    const double fs = 30.72e6;
    const auto x = tone(1 << 16, 13e6, 1.0, fs);
    CHECK(band_power(x, 20e6) <= to_db(1.0) - 60.0);
}

TEST_CASE("band power of a -12 dBFS frame over its occupied band")
{
    auto cfg = default_waveform(20e6);
    cfg.num_symbols = 64;
    const auto x = generate_frame(cfg);
    const auto p = welch_psd(x);
    CHECK(std::abs(band_power(p, occupied_bandwidth(p)) + 12.0) <= 0.2);
    CHECK(std::abs(to_db(mean_power(x)) + 12.0) <= 0.1);
}

TEST_CASE("band power scales exactly with gain")
{
    const auto x = oracle::noise_signal(1 << 14, 5);
    ComplexSignal y = x;
    const cplx c = std::polar(0.03, -0.4);
    for (auto& v : y.samples) v *= c;
    CHECK(band_power(y, 10e6) == doctest::Approx(band_power(x, 10e6) + 20 * std::log10(std::abs(c))).epsilon(1e-12));
}

TEST_CASE("suppression chain arithmetic")
{
    const std::vector<std::string> names{"a", "b", "c", "d"};
    const std::vector<double> powers{0.0, -20.0, -65.0, -90.0};
    const auto r = suppression_from_powers(names, powers);
    REQUIRE(r.size() == 4);
    CHECK(r[0].suppression_vs_prev_db == 0.0);
    CHECK(r[1].suppression_vs_prev_db == doctest::Approx(20.0));
    CHECK(r[2].suppression_vs_prev_db == doctest::Approx(45.0));
    CHECK(r[3].suppression_vs_prev_db == doctest::Approx(25.0));
    CHECK(total_suppression(r) == doctest::Approx(90.0));
}

TEST_CASE("suppression chain on signals")
{
    const auto x = oracle::noise_signal(1 << 14, 6);
    ComplexSignal y = x, z = x;
    for (auto& v : y.samples) v *= 0.1;
    for (auto& v : z.samples) v *= 0.001;
    const std::vector<NamedSignal> same{{"in", x}, {"out", x}};
    CHECK(suppression_chain(same, 20e6)[1].suppression_vs_prev_db == doctest::Approx(0.0));

    const std::vector<NamedSignal> chain{{"in", x}, {"mid", y}, {"out", z}};
    const auto r = suppression_chain(chain, 20e6);
    CHECK(r[1].suppression_vs_prev_db == doctest::Approx(20.0));
    CHECK(r[2].suppression_vs_prev_db == doctest::Approx(40.0));
    CHECK(r[0].stage_name == "in");
    CHECK_FALSE(r[2].psd.density.empty());

    std::vector<NamedSignal> scaled = chain;
    for (auto& s : scaled)
        for (auto& v : s.signal.samples) v *= 7.0;
    const auto rs = suppression_chain(scaled, 20e6);
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(rs[i].suppression_vs_prev_db == doctest::Approx(r[i].suppression_vs_prev_db).epsilon(1e-9));

    ComplexSignal other = x;
    other.sample_rate_hz = 1.0;
    const std::vector<NamedSignal> bad{{"in", x}, {"out", other}};
    CHECK_THROWS_AS(suppression_chain(bad, 20e6), ArgumentError);
    const std::vector<NamedSignal> one{{"in", x}};
    CHECK_THROWS_AS(suppression_chain(one, 20e6), ArgumentError);
}

TEST_CASE("conjugation mirrors the spectrum and conjugate time reversal keeps it")
{
    auto cfg = default_waveform(20e6);
    cfg.num_symbols = 16;
    auto x = generate_frame(cfg);
    // Asymmetric spectrum: shift the frame up by 3 MHz.
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= std::polar(1.0, 2 * std::numbers::pi * 3e6 / x.sample_rate_hz * double(i));
    ComplexSignal conj = x, rev = x, both = x;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        conj[i] = std::conj(x[i]);
        rev[i] = x[n - 1 - i];
        both[i] = std::conj(x[n - 1 - i]);
    }
    const std::size_t seg = 1024;
    const auto px = welch_psd(x, seg), pc = welch_psd(conj, seg), pr = welch_psd(rev, seg), pb = welch_psd(both, seg);
    for (std::size_t i = 1; i < seg; ++i) {
        const std::size_t m = seg - i;
        CHECK(pc.density[i] == doctest::Approx(px.density[m]).epsilon(1e-9));
        CHECK(pb.density[i] == doctest::Approx(pr.density[m]).epsilon(1e-9));
    }
    // Conjugate time reversal mirrors twice and keeps the spectrum in place.
    CHECK(to_db(pc.integrate(8e6, 15e6)) < to_db(px.integrate(8e6, 15e6)) - 10.0);
    CHECK(std::abs(to_db(pb.integrate(8e6, 15e6)) - to_db(px.integrate(8e6, 15e6))) < 0.5);
}

TEST_CASE("psd csv layout")
{
    const auto p = welch_psd(oracle::noise_signal(256, 7), 64);
    std::ostringstream os;
    p.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "freq_hz,density_db");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 64);
}

TEST_CASE("occupied bandwidth of white noise is nearly the full band")
{
    const auto x = oracle::noise_signal(1 << 16, 8, 10e6);
    CHECK(occupied_bandwidth(welch_psd(x), 0.99) == doctest::Approx(9.9e6).epsilon(0.03));
}
