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
#include "sicsim/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace sicsim {

namespace {

std::vector<double> make_window(Window w, std::size_t n)
{
    std::vector<double> v(n, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        switch (w) {
        case Window::hann: v[i] = 0.5 - 0.5 * std::cos(two_pi * t); break;
        case Window::hamming: v[i] = 0.54 - 0.46 * std::cos(two_pi * t); break;
        case Window::blackman: v[i] = 0.42 - 0.5 * std::cos(two_pi * t) + 0.08 * std::cos(2.0 * two_pi * t); break;
        case Window::rectangular: break;
        }
    }
    return v;
}

} // namespace

Window window_from_string(const std::string& name)
{
    if (name == "hann") return Window::hann;
    if (name == "hamming") return Window::hamming;
    if (name == "blackman") return Window::blackman;
    if (name == "rectangular") return Window::rectangular;
    throw ArgumentError("unknown window '" + name + "'");
}

std::vector<double> Psd::density_db() const
{
    std::vector<double> out(density.size());
    std::transform(density.begin(), density.end(), out.begin(), [](double d) { return to_db(d); });
    return out;
}

double Psd::integrate(double lo_hz, double hi_hz) const
{
    double acc = 0.0;
    for (std::size_t i = 0; i < freqs_hz.size(); ++i)
        if (freqs_hz[i] >= lo_hz && freqs_hz[i] <= hi_hz) acc += density[i];
    return acc * bin_width_hz;
}

void Psd::write_csv(std::ostream& os) const
{
    os << "freq_hz,density_db\n";
    std::ostringstream line;
    line.precision(12);
    for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
        line.str("");
        line << freqs_hz[i] << ',' << to_db(density[i]) << '\n';
        os << line.str();
    }
}

Psd welch_psd(const ComplexSignal& x, std::size_t seg_len, double overlap, Window window)
{
    require_valid(x, "welch_psd input");
    if (seg_len == 0 || seg_len > x.size()) throw ArgumentError("segment length must be in [1, signal length]");
    if (!(overlap >= 0.0 && overlap <= 0.9)) throw ArgumentError("overlap must be in [0, 0.9]");
    if (!(x.sample_rate_hz > 0.0)) throw ArgumentError("sample rate must be > 0");

    const auto w = make_window(window, seg_len);
    double u = 0.0;
    for (double v : w) u += v * v;
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seg_len * (1.0 - overlap))));

    Fft fft(seg_len, Fft::Direction::forward);
    std::vector<cplx> buf(seg_len);
    std::vector<double> acc(seg_len, 0.0);
    std::size_t segments = 0;
    for (std::size_t b = 0; b + seg_len <= x.size(); b += hop) {
        for (std::size_t i = 0; i < seg_len; ++i) buf[i] = w[i] * x[b + i];
        fft.execute(buf, buf);
        for (std::size_t i = 0; i < seg_len; ++i) acc[i] += std::norm(buf[i]);
        ++segments;
    }

    Psd psd;
    psd.bin_width_hz = x.sample_rate_hz / static_cast<double>(seg_len);
    psd.freqs_hz.resize(seg_len);
    psd.density.resize(seg_len);
    const double norm = 1.0 / (static_cast<double>(segments) * u * x.sample_rate_hz);
    const std::size_t neg = seg_len / 2;
    for (std::size_t i = 0; i < seg_len; ++i) {
        // Output bin i holds FFT bin (i + neg) mod seg_len.
        const std::size_t k = (i + seg_len - neg) % seg_len;
        const auto signed_k = static_cast<double>(i) - static_cast<double>(neg);
        psd.freqs_hz[i] = signed_k * psd.bin_width_hz;
        psd.density[i] = acc[k] * norm;
    }
    return psd;
}

Psd default_psd(const ComplexSignal& x) { return welch_psd(x, std::min(default_segment, x.size())); }

double band_power(const Psd& psd, double bw_hz)
{
    const double half = 0.5 * bw_hz;
    return to_db(psd.integrate(-half - 1e-9 * psd.bin_width_hz, half + 1e-9 * psd.bin_width_hz));
}

double band_power(const ComplexSignal& x, double bw_hz)
{
    if (!(bw_hz > 0.0) || bw_hz > x.sample_rate_hz * (1.0 + 1e-12))
        throw ArgumentError("bandwidth must be in (0, sample_rate]");
    return band_power(default_psd(x), bw_hz);
}

double occupied_bandwidth(const Psd& psd, double fraction)
{
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("fraction must be in (0, 1]");
    const double total = psd.integrate(-1e300, 1e300);
    double best = 0.0;
    std::vector<double> edges = psd.freqs_hz;
    for (double& e : edges) e = std::abs(e);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (double e : edges) {
        best = 2.0 * e;
        if (psd.integrate(-e, e) >= fraction * total) break;
    }
    return best;
}

std::vector<StageReport> suppression_from_powers(std::span<const std::string> names, std::span<const double> powers_db)
{
    if (names.size() != powers_db.size()) throw ArgumentError("one power per stage is required");
    if (names.size() < 2) throw ArgumentError("at least two stages are required");
    std::vector<StageReport> out(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        out[i].stage_name = names[i];
        out[i].band_power_db = powers_db[i];
        out[i].suppression_vs_prev_db = i == 0 ? 0.0 : powers_db[i - 1] - powers_db[i];
    }
    return out;
}

std::vector<StageReport> suppression_chain(std::span<const NamedSignal> stages, double bw_hz)
{
    if (stages.size() < 2) throw ArgumentError("at least two stages are required");
    const double fs = stages.front().signal.sample_rate_hz;
    for (const auto& s : stages)
        if (s.signal.sample_rate_hz != fs) throw ArgumentError("stage sample rates differ");
    std::vector<std::string> names;
    std::vector<double> powers;
    std::vector<Psd> psds;
    for (const auto& s : stages) {
        psds.push_back(default_psd(s.signal));
        names.push_back(s.name);
        powers.push_back(band_power(psds.back(), bw_hz));
    }
    auto out = suppression_from_powers(names, powers);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].psd = std::move(psds[i]);
    return out;
}

double total_suppression(std::span<const StageReport> reports)
{
    if (reports.empty()) return 0.0;
    return reports.front().band_power_db - reports.back().band_power_db;
}

} // namespace sicsim
