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

#include "sicsim/impairments.hpp"

#include "sicsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

namespace sicsim {

namespace {

constexpr double fractional_beta = 3.0;

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

void check_component(const PathComponent& c, const std::string& name, bool unit_bound)
{
    if (!std::isfinite(c.delay_samples) || c.delay_samples < 0.0)
        throw ConfigError(name + ".delay_samples", name + " delay must be ≥ 0");
    const double g = std::abs(c.gain);
    if (!std::isfinite(g)) throw ConfigError(name + ".gain", name + " gain must be finite");
    if (unit_bound) {
        if (g >= 1.0) throw ConfigError(name + ".gain", name + " gain must be < 1");
        if (g <= 0.0) throw ConfigError(name + ".gain", name + " gain must be > 0");
    }
}

} // namespace

void validate(const PaModel& pa)
{
    if (pa.orders.size() != pa.branch_firs.size())
        throw ConfigError("pa.branch_firs", "one branch FIR per order is required");
    std::set<int> seen;
    bool has_linear = false;
    for (std::size_t i = 0; i < pa.orders.size(); ++i) {
        const int p = pa.orders[i];
        if (p < 1 || p % 2 == 0) throw ConfigError("pa.orders", "PA orders must be odd and ≥ 1");
        if (!seen.insert(p).second) throw ConfigError("pa.orders", "PA orders must be unique");
        if (i > 0 && p < pa.orders[i - 1]) throw ConfigError("pa.orders", "PA orders must be sorted");
        if (pa.branch_firs[i].empty()) throw ConfigError("pa.branch_firs", "branch FIRs must be non-empty");
        for (const auto& c : pa.branch_firs[i])
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw ConfigError("pa.branch_firs", "branch FIR taps must be finite");
        if (p == 1)
            has_linear = std::any_of(pa.branch_firs[i].begin(), pa.branch_firs[i].end(),
                                     [](cplx c) { return std::abs(c) > 0.0; });
    }
    if (!seen.count(1)) throw ConfigError("pa.orders", "PA orders must contain 1");
    if (!has_linear) throw ConfigError("pa.branch_firs", "linear branch needs a nonzero tap");
    if (!std::isfinite(pa.linear_gain_db)) throw ConfigError("pa.linear_gain_db", "linear_gain_db must be finite");
}

PaModel make_nonlinear_pa(const NonlinearPaSpec& spec)
{
    if (spec.max_order < 1 || spec.max_order % 2 == 0)
        throw ConfigError("pa.max_order", "max_order must be odd and ≥ 1");
    if (spec.memory.empty()) throw ConfigError("pa.memory", "memory must be non-empty");
    const double sigma2 = from_db(spec.drive_dbfs);
    PaModel pa;
    pa.linear_gain_db = spec.linear_gain_db;
    for (int p = 1; p <= spec.max_order; p += 2) {
        const int k = (p - 1) / 2;
        double a = 1.0;
        cplx rot = 1.0;
        if (k > 0) {
            // E|psi_p|^2 = p! sigma^(2p) for circular Gaussian drive.
            const double rel = from_db(spec.third_order_dbc - spec.order_step_db * (k - 1));
            a = std::sqrt(rel / (factorial(p) * std::pow(sigma2, p - 1)));
            rot = std::polar(k % 2 ? -1.0 : 1.0, 0.3 * k);
        }
        std::vector<cplx> fir;
        for (const auto& m : spec.memory) fir.push_back(a * rot * m);
        pa.orders.push_back(p);
        pa.branch_firs.push_back(std::move(fir));
    }
    return pa;
}

PaModel make_linear_pa(double linear_gain_db, std::vector<cplx> memory)
{
    PaModel pa;
    pa.orders = {1};
    pa.branch_firs = {std::move(memory)};
    pa.linear_gain_db = linear_gain_db;
    return pa;
}

ComplexSignal apply_pa(const ComplexSignal& x, const PaModel& pa)
{
    require_valid(x, "apply_pa input");
    validate(pa);
    const std::size_t n = x.size();
    const double g = std::pow(10.0, pa.linear_gain_db / 20.0);
    std::vector<cplx> y(n);
    std::vector<cplx> psi(n);
    for (std::size_t b = 0; b < pa.orders.size(); ++b) {
        for (std::size_t i = 0; i < n; ++i) psi[i] = odd_power(x[i], pa.orders[b]);
        const auto& fir = pa.branch_firs[b];
        for (std::size_t i = 0; i < n; ++i) {
            cplx acc{};
            const std::size_t kmax = std::min(fir.size(), i + 1);
            for (std::size_t k = 0; k < kmax; ++k) acc += fir[k] * psi[i - k];
            y[i] += acc;
        }
    }
    for (auto& v : y) v *= g;
    return ComplexSignal(std::move(y), x.sample_rate_hz);
}

void validate(const SiChannelModel& ch)
{
    check_component(ch.leakage, "leakage", true);
    check_component(ch.reflection, "reflection", true);
    if (ch.reflection.delay_samples < ch.leakage.delay_samples)
        throw ConfigError("reflection.delay_samples", "reflection delay must be ≥ leakage delay");
    const double bound = std::min(std::abs(ch.leakage.gain), std::abs(ch.reflection.gain));
    for (std::size_t i = 0; i < ch.multipath.size(); ++i) {
        const std::string name = "multipath[" + std::to_string(i) + "]";
        check_component(ch.multipath[i], name, false);
        if (std::abs(ch.multipath[i].gain) >= bound)
            throw ConfigError(name + ".gain", name + " gain must be < min(|leakage gain|, |reflection gain|)");
    }
    if (std::isnan(ch.rx_noise_floor_dbfs) || ch.rx_noise_floor_dbfs >= 0.0)
        throw ConfigError("rx_noise_floor_dbfs", "rx_noise_floor_dbfs must be < 0");
}

SiChannelModel default_channel()
{
    auto comp = [](double delay, double gain_db, double phase_deg) {
        return PathComponent{delay, std::polar(std::pow(10.0, gain_db / 20.0), phase_deg * std::numbers::pi / 180.0)};
    };
    SiChannelModel ch;
    ch.leakage = comp(0.2, -22.0, 40.0);
    ch.reflection = comp(0.52, -14.0, 115.0);
    ch.multipath = {comp(1.5, -48.0, 190.0), comp(3.0, -56.0, 265.0)};
    ch.rx_noise_floor_dbfs = -80.0;
    return ch;
}

std::array<double, 2 * fractional_half_length + 1> fractional_kernel(double frac)
{
    constexpr std::size_t len = 2 * fractional_half_length + 1;
    static const auto w = kaiser_window(len, fractional_beta);
    std::array<double, len> h{};
    double dc = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double k = static_cast<double>(i) - fractional_half_length;
        h[i] = sinc(k - frac) * w[i];
        dc += h[i];
    }
    for (auto& v : h) v /= dc;
    return h;
}

ComplexSignal delay_signal(const ComplexSignal& x, double d)
{
    if (!std::isfinite(d) || d < 0.0) throw ArgumentError("delay must be finite and ≥ 0");
    const std::size_t n = x.size();
    if (d >= static_cast<double>(n)) throw ArgumentError("delay must be shorter than the signal");
    const double whole = std::floor(d);
    const double frac = d - whole;
    const auto shift = static_cast<std::ptrdiff_t>(whole);
    std::vector<cplx> y(n);
    if (frac < 1e-12) {
        std::copy(x.samples.begin(), x.samples.end() - shift, y.begin() + shift);
        return ComplexSignal(std::move(y), x.sample_rate_hz);
    }
    const auto h = fractional_kernel(frac);
    const auto sn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
        cplx acc{};
        for (int k = -fractional_half_length; k <= fractional_half_length; ++k) {
            const std::ptrdiff_t j = i - shift - k;
            if (j >= 0 && j < sn) acc += h[static_cast<std::size_t>(k + fractional_half_length)] * x.samples[static_cast<std::size_t>(j)];
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    return ComplexSignal(std::move(y), x.sample_rate_hz);
}

ComplexSignal apply_si_channel(const ComplexSignal& pa_out, const SiChannelModel& ch)
{
    require_valid(pa_out, "apply_si_channel input");
    std::vector<PathComponent> comps{ch.leakage, ch.reflection};
    comps.insert(comps.end(), ch.multipath.begin(), ch.multipath.end());
    std::vector<cplx> y(pa_out.size());
    for (const auto& c : comps) {
        const auto d = delay_signal(pa_out, c.delay_samples);
        if (c.gain == cplx{}) continue;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += c.gain * d[i];
    }
    return ComplexSignal(std::move(y), pa_out.sample_rate_hz);
}

ComplexSignal add_noise(const ComplexSignal& x, double floor_dbfs, std::uint64_t seed)
{
    if (std::isnan(floor_dbfs) || floor_dbfs >= 0.0) throw ArgumentError("noise floor must be < 0 dBFS");
    if (std::isinf(floor_dbfs)) return x;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, std::sqrt(0.5 * from_db(floor_dbfs)));
    ComplexSignal y = x;
    for (auto& v : y.samples) {
        const double re = n01(rng);
        const double im = n01(rng);
        v += cplx(re, im);
    }
    return y;
}

void validate(const AdcConfig& adc)
{
    if (adc.bits < 4 || adc.bits > 16) throw ConfigError("adc.bits", "adc bits must be in [4, 16]");
    if (!(adc.full_scale > 0.0) || !std::isfinite(adc.full_scale))
        throw ConfigError("adc.full_scale", "adc full_scale must be > 0");
}

ComplexSignal quantize(const ComplexSignal& x, const AdcConfig& adc)
{
    validate(adc);
    const double lsb = 2.0 * adc.full_scale / std::ldexp(1.0, adc.bits);
    const double top = adc.full_scale - 0.5 * lsb;
    auto rail = [&](double v) {
        const double q = (std::floor(v / lsb) + 0.5) * lsb;
        return std::clamp(q, -top, top);
    };
    ComplexSignal y = x;
    for (auto& v : y.samples) v = cplx(rail(v.real()), rail(v.imag()));
    return y;
}

std::size_t count_clipped(const ComplexSignal& x, const AdcConfig& adc, std::size_t begin, std::size_t end)
{
    end = std::min(end, x.size());
    std::size_t count = 0;
    for (std::size_t i = begin; i < end; ++i)
        if (std::abs(x[i].real()) > adc.full_scale || std::abs(x[i].imag()) > adc.full_scale) ++count;
    return count;
}

} // namespace sicsim
