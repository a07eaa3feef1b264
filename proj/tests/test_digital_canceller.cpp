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

#include "sicsim/errors.hpp"
#include "sicsim/digital_canceller.hpp"
#include "sicsim/impairments.hpp"
#include "sicsim/waveform.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace sicsim;

namespace {

ComplexSignal ofdm(std::size_t n, std::uint64_t seed = 1, double cf = 9.0)
{
    auto cfg = default_waveform(20e6);
    cfg.seed = seed;
    cfg.crest_factor_db = cf;
    cfg.num_symbols = static_cast<int>((n + symbol_length(cfg) - 1) / symbol_length(cfg));
    auto x = generate_frame(cfg);
    x.samples.resize(n);
    return x;
}

// Known parallel-Hammerstein response followed by a fixed linear channel.
ComplexSignal synthetic_si(const ComplexSignal& tx, double noise_dbfs, std::uint64_t seed)
{
    const auto pa_out = apply_pa(tx, make_nonlinear_pa(NonlinearPaSpec{}));
    auto ch = default_channel();
    auto rx = apply_si_channel(pa_out, ch);
    for (auto& v : rx.samples) v *= 0.02;
    return add_noise(rx, noise_dbfs, seed);
}

double tail_db(const ComplexSignal& x, std::size_t begin, std::size_t end)
{
    return to_db(mean_power(std::span<const cplx>(x.samples).subspan(begin, end - begin)));
}

} // namespace

TEST_CASE("linear memoryless basis is the signal itself")
{
    const auto x = oracle::noise_signal(32, 1);
    const auto b = build_basis(x, 1, 0, 0);
    REQUIRE(b.columns.cols() == 1);
    REQUIRE(b.columns.rows() == 32);
    for (Eigen::Index i = 0; i < 32; ++i) CHECK(b.columns(i, 0) == x[std::size_t(i)]);
}

TEST_CASE("order 11 with lags -2..10 has 78 unique columns")
{
    const auto x = oracle::noise_signal(100, 2);
    const auto b = build_basis(x, 11, 2, 10);
    CHECK(b.columns.cols() == 78);
    CHECK(b.columns.rows() == 100 - 12);
    std::set<std::pair<int, int>> seen;
    for (const auto& l : b.labels) seen.insert({l.order, l.lag});
    CHECK(seen.size() == 78);
}

TEST_CASE("basis columns hold delayed odd powers")
{
    const auto x = oracle::noise_signal(40, 3);
    const auto b = build_basis(x, 5, 2, 3);
    for (Eigen::Index j = 0; j < b.columns.cols(); ++j) {
        const auto& l = b.labels[std::size_t(j)];
        for (Eigen::Index r = 0; r < b.columns.rows(); ++r) {
            const long n = long(b.first_sample) + long(r) - l.lag;
            const cplx v = x[std::size_t(n)];
            const cplx ref = std::pow(std::abs(v), l.order - 1) * v;
            CHECK(std::abs(b.columns(r, j) - ref) <= 1e-14 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST_CASE("basis is homogeneous in real scaling")
{
    const auto x = oracle::noise_signal(50, 4);
    ComplexSignal y = x;
    const double c = 1.7;
    for (auto& v : y.samples) v *= c;
    const auto bx = build_basis(x, 7, 1, 2), by = build_basis(y, 7, 1, 2);
    for (Eigen::Index j = 0; j < bx.columns.cols(); ++j) {
        const double f = std::pow(c, bx.labels[std::size_t(j)].order);
        CHECK((by.columns.col(j) - f * bx.columns.col(j)).norm() <= 1e-12 * by.columns.col(j).norm());
    }
}

TEST_CASE("even order is rejected")
{
    CHECK_THROWS_AS(build_basis(oracle::noise_signal(40, 5), 4, 0, 1), ArgumentError);
}

TEST_CASE("orthonormal basis gives an identity transform")
{
    const Eigen::Index n = 4096, m = 6;
    Eigen::MatrixXcd a(n, m);
    const auto z = oracle::white_noise(std::size_t(n * m), 6);
    for (Eigen::Index i = 0; i < n * m; ++i) a(i % n, i / n) = z[std::size_t(i)];
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    BasisMatrix b;
    b.columns = qr.householderQ() * Eigen::MatrixXcd::Identity(n, m) * std::sqrt(double(n));
    b.labels = basis_labels(11, 0, 0);
    const auto o = orthogonalize(b);
    CHECK((o.transform - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("duplicate columns raise a degeneracy error naming them")
{
    BasisMatrix b;
    const auto z = oracle::white_noise(600, 7);
    b.columns.resize(200, 3);
    for (Eigen::Index i = 0; i < 200; ++i) {
        b.columns(i, 0) = z[std::size_t(i)];
        b.columns(i, 1) = z[std::size_t(i + 200)];
        b.columns(i, 2) = z[std::size_t(i + 200)];
    }
    b.labels = {{1, 0}, {1, 1}, {1, 2}};
    try {
        orthogonalize(b);
        FAIL("expected degeneracy");
    } catch (const DegeneracyError& e) {
        CHECK(e.columns() == std::vector<std::size_t>{2});
    }
}

TEST_CASE("constant envelope input makes the odd powers collinear")
{
    std::vector<cplx> x(300);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::polar(0.5, 0.37 * double(i * i));
    CHECK_THROWS_AS(orthogonalize(build_basis(ComplexSignal(x, 1.0), 5, 0, 1)), DegeneracyError);
}

TEST_CASE("ofdm basis whitening reaches a near-identity gram matrix")
{
    const auto x = ofdm(16384 + 12);
    const auto b = build_basis(x, 11, 2, 10);
    const auto o = orthogonalize(b);
    const auto n = double(o.ortho.columns.rows());
    const Eigen::MatrixXcd g = o.ortho.columns.adjoint() * o.ortho.columns / n;
    CHECK((g - Eigen::MatrixXcd::Identity(78, 78)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(o.ortho_condition < 1.01);
    CHECK(o.raw_condition > 1e3);
    CHECK(gram_condition(b.columns) == doctest::Approx(o.raw_condition).epsilon(1e-3));
    // The transform maps the raw basis onto the whitened one.
    CHECK((b.columns * o.transform - o.ortho.columns).norm() <= 1e-9 * o.ortho.columns.norm());
}

TEST_CASE("lms on zero rx keeps zero coefficients")
{
    const auto x = oracle::noise_signal(2000, 8);
    const auto o = orthogonalize(build_basis(x, 3, 1, 2));
    const ComplexSignal rx(std::vector<cplx>(std::size_t(o.ortho.columns.rows())), 1.0);
    DigitalCancellerModel m;
    m.P = 3;
    m.memory_pre = 1;
    m.memory_post = 2;
    m.ortho_transform = o.transform;
    m.coeffs = Eigen::VectorXcd::Zero(o.ortho.columns.cols());
    const auto out = dc_lms_run(rx, o.ortho, m);
    for (const auto& v : out.residual.samples) CHECK(v == cplx(0));
    CHECK(m.coeffs.isZero(0.0));
}

TEST_CASE("lms residual is no lower than the least-squares optimum")
{
    const std::size_t n = 1 << 15;
    const auto tx = ofdm(n, 2);
    const auto rx_full = synthetic_si(tx, -95.0, 3);
    const auto b = build_basis(tx, 5, 2, 10);
    const auto o = orthogonalize(b);
    const ComplexSignal rx(std::vector<cplx>(rx_full.samples.begin() + 10, rx_full.samples.end() - 2), 1.0);
    DigitalCancellerModel m;
    m.P = 5;
    m.ortho_transform = o.transform;
    m.coeffs = Eigen::VectorXcd::Zero(o.ortho.columns.cols());
    const auto lms = dc_lms_run(rx, o.ortho, m, 1024);
    CHECK_FALSE(lms.coeff_trace.empty());
    const auto ls = dc_block_ls(rx, o.ortho);
    const std::size_t h = rx.size() / 2;
    CHECK(to_db(ls.residual_power) <= tail_db(lms.residual, h, rx.size()) + 0.01);
}

TEST_CASE("noisy parallel-Hammerstein rx is cancelled to the noise floor")
{
    const std::size_t n = 1 << 18;
    const auto tx = ofdm(n, 4);
    const auto rx = synthetic_si(tx, -95.0, 5);
    DigitalCancellerConfig cfg;
    const auto lms = cancel(rx, tx, cfg);
    const std::size_t h = n / 2;
    const double lms_db = tail_db(lms.residual, h, n - 2);
    CHECK(std::abs(lms_db + 95.0) <= 1.0);
    cfg.mode = DcMode::oracle;
    cfg.measure_begin = h;
    cfg.measure_end = n - 2;
    const auto ls = cancel(rx, tx, cfg);
    CHECK(ls.report.post_power_db <= lms_db);
    CHECK(ls.report.raw_condition > 1e3);
    CHECK(ls.report.ortho_condition < 1.01);
}

TEST_CASE("linear rx leaves the nonlinear branches empty")
{
    const std::size_t n = 1 << 17;
    const auto tx = ofdm(n, 6);
    auto rx = apply_si_channel(apply_pa(tx, make_linear_pa(0.0, NonlinearPaSpec{}.memory)), default_channel());
    rx = add_noise(rx, -90.0, 7);
    for (auto mode : {DcMode::lms, DcMode::oracle}) {
        DigitalCancellerConfig cfg;
        cfg.mode = mode;
        const auto out = cancel(rx, tx, cfg);
        std::map<int, double> energy;
        for (std::size_t j = 0; j < out.labels.size(); ++j)
            energy[out.labels[j].order] += std::norm(out.model.coeffs(Eigen::Index(j)));
        for (const auto& [order, e] : energy)
            if (order > 1) CHECK(e < 0.01 * energy[1]);
    }
}

TEST_CASE("rx in the column span is fitted to rounding level")
{
    const auto x = oracle::noise_signal(3000, 8);
    const auto o = orthogonalize(build_basis(x, 3, 1, 1));
    Eigen::VectorXcd c(o.ortho.columns.cols());
    for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = cplx(0.1 * double(j + 1), -0.05 * double(j));
    const Eigen::VectorXcd y = o.ortho.columns * c;
    const ComplexSignal rx(std::vector<cplx>(y.data(), y.data() + y.size()), 1.0);
    const auto fit = dc_block_ls(rx, o.ortho);
    CHECK(to_db(fit.residual_power) <= to_db(mean_power(rx)) - 140.0);
    CHECK((fit.coeffs - c).norm() < 1e-10 * c.norm());
}

TEST_CASE("rx orthogonal to the columns gives zero coefficients")
{
    const auto x = oracle::noise_signal(3000, 9);
    const auto o = orthogonalize(build_basis(x, 3, 1, 1));
    const auto z = oracle::white_noise(std::size_t(o.ortho.columns.rows()), 10);
    Eigen::VectorXcd y = Eigen::Map<const Eigen::VectorXcd>(z.data(), Eigen::Index(z.size()));
    const auto& q = o.ortho.columns;
    y -= q * (q.adjoint() * y) / double(q.rows());
    const ComplexSignal rx(std::vector<cplx>(y.data(), y.data() + y.size()), 1.0);
    CHECK(dc_block_ls(rx, o.ortho).coeffs.norm() < 1e-12);
}

TEST_CASE("linear canceller equals a direct least-squares fit")
{
    const std::size_t n = 20000;
    const auto tx = oracle::noise_signal(n, 11);
    const auto rx = add_noise(apply_si_channel(tx, default_channel()), -40.0, 12);
    DigitalCancellerConfig cfg;
    cfg.P = 1;
    cfg.fit_block = 4096;
    cfg.mode = DcMode::oracle;
    const auto out = cancel(rx, tx, cfg);

    // Direct regression on delayed copies of tx over the same rows.
    std::vector<std::vector<cplx>> a;
    std::vector<cplx> y, res;
    for (std::size_t i = 10; i + 2 < n; ++i) {
        std::vector<cplx> row;
        for (int lag = -2; lag <= 10; ++lag) row.push_back(tx[std::size_t(long(i) - lag)]);
        a.push_back(std::move(row));
        y.push_back(rx[i]);
        res.push_back(out.residual[i]);
    }
    const auto c = oracle::least_squares(a, y);
    const double p_oracle = oracle::residual_power(a, y, c);
    const double p_dc = oracle::power(res);
    CHECK(std::abs(p_dc - p_oracle) / p_oracle < 1e-10);
    const auto orig = out.original_coefficients();
    for (std::size_t j = 0; j < c.size(); ++j) CHECK(std::abs(orig[j].value - c[j]) < 1e-8);
}

TEST_CASE("original coefficients recover the generating filters")
{
    const std::size_t n = 1 << 17;
    const auto tx = ofdm(n, 13);
    const std::vector<int> orders{1, 3, 5};
    std::vector<std::vector<cplx>> h{{cplx(0.5, 0.2), cplx(0.1, -0.05), cplx(0.02, 0.01)},
                                     {cplx(-2.0, 1.0), cplx(0.5, 0.3), cplx(0.0, -0.2)},
                                     {cplx(8.0, -6.0), cplx(-2.0, 0.0), cplx(1.0, 1.0)}};
    const auto clean = apply_pa(tx, PaModel{orders, h, 0.0});
    const auto rx = add_noise(clean, to_db(mean_power(clean)) - 40.0, 14);
    for (auto mode : {DcMode::oracle, DcMode::lms}) {
        DigitalCancellerConfig cfg;
        cfg.P = 5;
        cfg.memory_pre = 0;
        cfg.memory_post = 2;
        cfg.mode = mode;
        const auto coeffs = cancel(rx, tx, cfg).original_coefficients();
        double num = 0.0, den = 0.0;
        for (const auto& oc : coeffs) {
            const cplx truth = h[std::size_t(oc.label.order / 2)][std::size_t(oc.label.lag)];
            num += std::norm(oc.value - truth);
            den += std::norm(truth);
        }
        CHECK(std::sqrt(num / den) < 0.05);
    }
}

TEST_CASE("suppression does not depend on the scale of tx")
{
    const std::size_t n = 1 << 16;
    const auto tx = ofdm(n, 15);
    const auto rx = synthetic_si(tx, -90.0, 16);
    ComplexSignal scaled = tx;
    for (auto& v : scaled.samples) v *= std::polar(0.3, 2.1);
    DigitalCancellerConfig cfg;
    cfg.measure_begin = n / 2;
    const auto a = cancel(rx, tx, cfg), b = cancel(rx, scaled, cfg);
    CHECK(std::abs(a.report.suppression_db - b.report.suppression_db) < 0.2);
}

TEST_CASE("zero reference passes rx through")
{
    const auto rx = oracle::noise_signal(20000, 17);
    const ComplexSignal tx(std::vector<cplx>(rx.size()), rx.sample_rate_hz);
    const auto out = cancel(rx, tx, DigitalCancellerConfig{});
    CHECK(out.report.zero_reference);
    CHECK(out.residual.samples == rx.samples);
    CHECK(out.report.suppression_db == 0.0);
}

TEST_CASE("digital configuration validation")
{
    DigitalCancellerConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.P = 10;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = {};
    cfg.memory_pre = -1;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = {};
    cfg.fit_block = 50;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = {};
    cfg.mu = 2.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}
