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

#include "sicsim/digital_canceller.hpp"

#include "sicsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sicsim {

namespace {

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double divergence_limit = 1e6;
constexpr double dependence_tol = 1e-7;
constexpr std::size_t chunk_rows = 4096;

void check_shape(int P, int pre, int post)
{
    if (P < 1 || P % 2 == 0) throw ArgumentError("P must be odd and ≥ 1");
    if (pre < 0 || post < 0) throw ArgumentError("memory lengths must be ≥ 0");
}

// Fills rows for samples n0 .. n0 + rows.rows() - 1.
void fill_rows(const ComplexSignal& x, int P, int pre, int post, std::size_t n0, RowMatrix& rows)
{
    const auto count = static_cast<std::size_t>(rows.rows());
    const std::size_t lo = n0 - static_cast<std::size_t>(post);
    const std::size_t span = count + static_cast<std::size_t>(pre + post);
    const int branches = (P + 1) / 2;
    const int lags = pre + post + 1;
    std::vector<cplx> psi(span * static_cast<std::size_t>(branches));
    for (std::size_t i = 0; i < span; ++i) {
        const cplx v = x[lo + i];
        const double m2 = std::norm(v);
        cplx acc = v;
        for (int b = 0; b < branches; ++b) {
            psi[static_cast<std::size_t>(b) * span + i] = acc;
            acc *= m2;
        }
    }
    for (std::size_t r = 0; r < count; ++r) {
        // psi index of x(n - l) is r + post - l.
        for (int b = 0; b < branches; ++b) {
            const cplx* base = psi.data() + static_cast<std::size_t>(b) * span + r + static_cast<std::size_t>(post);
            for (int l = -pre; l <= post; ++l)
                rows(static_cast<Eigen::Index>(r), b * lags + (l + pre)) = *(base - l);
        }
    }
}

std::vector<std::size_t> dependent_columns(const Eigen::MatrixXcd& r, const Eigen::VectorXd& col_norms)
{
    std::vector<std::size_t> dep;
    for (Eigen::Index j = 0; j < r.cols(); ++j)
        if (!(std::abs(r(j, j)) > dependence_tol * col_norms(j))) dep.push_back(static_cast<std::size_t>(j));
    return dep;
}

[[noreturn]] void throw_degenerate(const std::vector<std::size_t>& dep, const std::vector<BasisLabel>& labels)
{
    std::ostringstream msg;
    msg << "rank-deficient basis; dependent columns:";
    for (auto j : dep) {
        msg << ' ' << j;
        if (j < labels.size()) msg << "(p=" << labels[j].order << ",lag=" << labels[j].lag << ')';
    }
    throw DegeneracyError(dep, msg.str());
}

} // namespace

std::vector<BasisLabel> basis_labels(int P, int memory_pre, int memory_post)
{
    check_shape(P, memory_pre, memory_post);
    std::vector<BasisLabel> labels;
    for (int p = 1; p <= P; p += 2)
        for (int l = -memory_pre; l <= memory_post; ++l) labels.push_back({p, l});
    return labels;
}

BasisMatrix build_basis(const ComplexSignal& x, int P, int memory_pre, int memory_post)
{
    check_shape(P, memory_pre, memory_post);
    const std::size_t span = static_cast<std::size_t>(memory_pre + memory_post);
    if (x.size() <= span) throw ArgumentError("signal too short for the requested memory span");
    BasisMatrix b;
    b.labels = basis_labels(P, memory_pre, memory_post);
    b.first_sample = static_cast<std::size_t>(memory_post);
    RowMatrix rows(static_cast<Eigen::Index>(x.size() - span), static_cast<Eigen::Index>(b.labels.size()));
    fill_rows(x, P, memory_pre, memory_post, b.first_sample, rows);
    b.columns = rows;
    return b;
}

double gram_condition(const Eigen::MatrixXcd& columns)
{
    const Eigen::MatrixXcd g = columns.adjoint() * columns / static_cast<double>(columns.rows());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev.size() == 0) return 1.0;
    const double lo = ev.minCoeff();
    return lo > 0.0 ? ev.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

Orthogonalization orthogonalize(const BasisMatrix& basis)
{
    const auto& b = basis.columns;
    const Eigen::Index n = b.rows();
    const Eigen::Index m = b.cols();
    if (n <= m) throw ArgumentError("orthogonalize needs more rows than columns");

    // Equilibrate columns before the QR; psi_p spans many decades.
    Eigen::VectorXd scale(m);
    for (Eigen::Index j = 0; j < m; ++j) scale(j) = b.col(j).norm() / std::sqrt(static_cast<double>(n));
    std::vector<std::size_t> zero;
    for (Eigen::Index j = 0; j < m; ++j)
        if (!(scale(j) > 0.0)) zero.push_back(static_cast<std::size_t>(j));
    if (!zero.empty()) throw_degenerate(zero, basis.labels);

    const Eigen::MatrixXcd bs = b * scale.cwiseInverse().asDiagonal();
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(bs);
    Eigen::MatrixXcd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    const auto dep = dependent_columns(r, Eigen::VectorXd::Constant(m, std::sqrt(static_cast<double>(n))));
    if (!dep.empty()) throw_degenerate(dep, basis.labels);

    // Positive real diagonal makes the factor unique (Cholesky convention).
    for (Eigen::Index j = 0; j < m; ++j) {
        const cplx d = r(j, j);
        r.row(j) *= std::conj(d) / std::abs(d);
    }
    const Eigen::MatrixXcd rinv = r.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXcd::Identity(m, m) * std::sqrt(static_cast<double>(n)));

    Orthogonalization out;
    out.transform = scale.cwiseInverse().asDiagonal() * Eigen::MatrixXcd(rinv.triangularView<Eigen::Upper>());
    out.ortho.columns = b * out.transform.triangularView<Eigen::Upper>();
    out.ortho.labels = basis.labels;
    out.ortho.first_sample = basis.first_sample;

    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(r * scale.asDiagonal());
    const auto& sv = svd.singularValues();
    out.raw_condition = std::pow(sv(0) / sv(sv.size() - 1), 2);
    out.ortho_condition = gram_condition(out.ortho.columns);
    return out;
}

void validate(const DigitalCancellerModel& m)
{
    if (m.P < 1 || m.P % 2 == 0) throw ConfigError("digital_canceller.P", "P must be odd and ≥ 1");
    if (m.memory_pre < 0 || m.memory_post < 0)
        throw ConfigError("digital_canceller.memory", "memory lengths must be ≥ 0");
    const auto cols = static_cast<Eigen::Index>((m.P + 1) / 2 * (m.memory_pre + m.memory_post + 1));
    if (m.coeffs.size() != cols) throw ConfigError("digital_canceller.coeffs", "coefficient count must equal basis width");
    if (!(m.mu >= 0.0) || !std::isfinite(m.mu)) throw ConfigError("digital_canceller.mu", "mu must be ≥ 0");
}

namespace {

// One NLMS pass over rows of u aligned with rx samples n0.. ; updates c in place.
void nlms_rows(const RowMatrix& u, const ComplexSignal& rx, std::size_t n0, Eigen::VectorXcd& c, double mu,
               std::vector<cplx>& residual)
{
    const Eigen::Index cols = u.cols();
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        const std::size_t n = n0 + static_cast<std::size_t>(r);
        const auto row = u.row(r);
        const cplx e = rx[n] - (row * c).value();
        residual[n] = e;
        const double energy = row.squaredNorm();
        if (energy <= 0.0 || mu == 0.0) continue;
        const cplx g = mu / (energy + 1e-12 * static_cast<double>(cols)) * e;
        c.noalias() += g * row.adjoint();
        if (!(c.cwiseAbs().maxCoeff() <= divergence_limit)) {
            std::ostringstream msg;
            msg << "digital canceller diverged at sample " << n << " (|c| > 1e6) with mu = " << mu;
            throw DivergenceError(msg.str());
        }
    }
}

} // namespace

DcRunResult dc_lms_run(const ComplexSignal& rx_digital, const BasisMatrix& ortho, DigitalCancellerModel& model,
                       std::size_t trace_interval)
{
    if (static_cast<std::size_t>(ortho.columns.rows()) != rx_digital.size())
        throw ArgumentError("basis rows must equal rx length");
    if (model.coeffs.size() != ortho.columns.cols()) model.coeffs = Eigen::VectorXcd::Zero(ortho.columns.cols());
    if (trace_interval == 0) throw ArgumentError("trace_interval must be ≥ 1");
    DcRunResult out;
    std::vector<cplx> residual(rx_digital.size());
    const RowMatrix u = ortho.columns;
    for (std::size_t r0 = 0; r0 < rx_digital.size(); r0 += trace_interval) {
        const std::size_t count = std::min(trace_interval, rx_digital.size() - r0);
        const RowMatrix block = u.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(count));
        nlms_rows(block, rx_digital, r0, model.coeffs, model.mu, residual);
        out.coeff_trace.push_back({r0 + count, model.coeffs});
    }
    out.residual = ComplexSignal(std::move(residual), rx_digital.sample_rate_hz);
    return out;
}

LsFit dc_block_ls(const ComplexSignal& rx_digital, const BasisMatrix& ortho)
{
    const auto& a = ortho.columns;
    if (static_cast<std::size_t>(a.rows()) != rx_digital.size()) throw ArgumentError("basis rows must equal rx length");
    if (a.rows() <= a.cols()) throw ArgumentError("dc_block_ls needs more rows than columns");
    const Eigen::Map<const Eigen::VectorXcd> b(rx_digital.samples.data(), a.rows());
    Eigen::VectorXd norms(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) norms(j) = a.col(j).norm();
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    const Eigen::MatrixXcd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    const auto dep = dependent_columns(r, norms);
    if (!dep.empty()) throw_degenerate(dep, ortho.labels);
    LsFit fit;
    fit.coeffs = qr.solve(b);
    const Eigen::VectorXcd res = b - a * fit.coeffs;
    fit.residual_power = res.squaredNorm() / static_cast<double>(a.rows());
    fit.residual = ComplexSignal(std::vector<cplx>(res.data(), res.data() + res.size()), rx_digital.sample_rate_hz);
    return fit;
}

std::string to_string(DcMode m) { return m == DcMode::lms ? "lms" : "oracle"; }

void validate(const DigitalCancellerConfig& cfg)
{
    if (cfg.P < 1 || cfg.P % 2 == 0) throw ConfigError("digital_canceller.P", "P must be odd and ≥ 1");
    if (cfg.memory_pre < 0) throw ConfigError("digital_canceller.memory_pre", "memory_pre must be ≥ 0");
    if (cfg.memory_post < 0) throw ConfigError("digital_canceller.memory_post", "memory_post must be ≥ 0");
    if (!(cfg.mu >= 0.0) || !(cfg.mu < 2.0)) throw ConfigError("digital_canceller.mu", "mu must be in [0, 2)");
    const auto cols = static_cast<std::size_t>((cfg.P + 1) / 2 * (cfg.memory_pre + cfg.memory_post + 1));
    if (cfg.fit_block <= cols) throw ConfigError("digital_canceller.fit_block", "fit_block must exceed the basis width");
    if (cfg.trace_interval == 0)
        throw ConfigError("digital_canceller.trace_interval", "trace_interval must be ≥ 1");
}

std::vector<OriginalCoefficient> CancelResult::original_coefficients() const
{
    std::vector<OriginalCoefficient> out;
    if (model.coeffs.size() == 0) return out;
    const Eigen::VectorXcd c = model.ortho_transform * model.coeffs;
    for (std::size_t j = 0; j < labels.size(); ++j) out.push_back({labels[j], c(static_cast<Eigen::Index>(j))});
    return out;
}

CancelResult cancel(const ComplexSignal& rx_digital, const ComplexSignal& tx_data, const DigitalCancellerConfig& cfg)
{
    validate(cfg);
    require_valid(rx_digital, "digital canceller rx");
    require_valid(tx_data, "digital canceller tx_data");
    if (rx_digital.size() != tx_data.size()) throw ArgumentError("rx and tx_data must have equal length");

    const std::size_t n = rx_digital.size();
    const auto pre = static_cast<std::size_t>(cfg.memory_pre);
    const auto post = static_cast<std::size_t>(cfg.memory_post);
    const std::size_t mbegin = std::min(cfg.measure_begin, n);
    const std::size_t mend = std::min(cfg.measure_end, n);
    if (mend <= mbegin) throw ArgumentError("empty measurement range");

    CancelResult out;
    out.labels = basis_labels(cfg.P, cfg.memory_pre, cfg.memory_post);
    out.report.mode = cfg.mode;
    out.report.columns = out.labels.size();
    out.model.P = cfg.P;
    out.model.memory_pre = cfg.memory_pre;
    out.model.memory_post = cfg.memory_post;
    out.model.mu = cfg.mu;
    const auto cols = static_cast<Eigen::Index>(out.labels.size());
    out.model.coeffs = Eigen::VectorXcd::Zero(cols);

    std::vector<cplx> residual = rx_digital.samples;
    auto rx_span = std::span<const cplx>(rx_digital.samples).subspan(mbegin, mend - mbegin);
    out.report.pre_power_db = to_db(mean_power(rx_span));

    const bool zero_ref = std::all_of(tx_data.samples.begin(), tx_data.samples.end(), [](cplx v) { return v == cplx{}; });
    if (zero_ref) {
        out.report.zero_reference = true;
        out.report.post_power_db = out.report.pre_power_db;
        out.residual = ComplexSignal(std::move(residual), rx_digital.sample_rate_hz);
        return out;
    }

    const std::size_t first = post;
    const std::size_t stop = n - std::min(n, pre);
    if (stop <= first || stop - first < cfg.fit_block) throw ArgumentError("signal shorter than the whitening fit block");
    const std::size_t fit0 = std::clamp(cfg.fit_offset, first, stop - cfg.fit_block);

    RowMatrix rows(static_cast<Eigen::Index>(cfg.fit_block), cols);
    fill_rows(tx_data, cfg.P, cfg.memory_pre, cfg.memory_post, fit0, rows);
    BasisMatrix fit_basis{rows, out.labels, fit0};
    const auto orth = orthogonalize(fit_basis);
    out.model.ortho_transform = orth.transform;
    out.report.raw_condition = orth.raw_condition;
    out.report.ortho_condition = orth.ortho_condition;
    const Eigen::MatrixXcd t = orth.transform;

    auto for_each_chunk = [&](std::size_t from, std::size_t to, auto&& fn) {
        RowMatrix raw, u;
        for (std::size_t r0 = from; r0 < to; r0 += chunk_rows) {
            const std::size_t count = std::min(chunk_rows, to - r0);
            raw.resize(static_cast<Eigen::Index>(count), cols);
            fill_rows(tx_data, cfg.P, cfg.memory_pre, cfg.memory_post, r0, raw);
            u.noalias() = raw * t.triangularView<Eigen::Upper>();
            fn(r0, u);
        }
    };

    if (cfg.mode == DcMode::lms) {
        std::size_t next_trace = first + cfg.trace_interval;
        for_each_chunk(first, stop, [&](std::size_t r0, const RowMatrix& u) {
            nlms_rows(u, rx_digital, r0, out.model.coeffs, cfg.mu, residual);
            if (r0 + static_cast<std::size_t>(u.rows()) >= next_trace || r0 + static_cast<std::size_t>(u.rows()) == stop) {
                out.coeff_trace.push_back({r0 + static_cast<std::size_t>(u.rows()), out.model.coeffs});
                next_trace += cfg.trace_interval;
            }
        });
    } else {
        const std::size_t fb = std::max(first, mbegin);
        const std::size_t fe = std::min(stop, mend);
        if (fe <= fb || fe - fb <= static_cast<std::size_t>(cols))
            throw ArgumentError("oracle fit range must hold more samples than columns");
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(cols, cols);
        Eigen::VectorXcd h = Eigen::VectorXcd::Zero(cols);
        for_each_chunk(fb, fe, [&](std::size_t r0, const RowMatrix& u) {
            const Eigen::Map<const Eigen::VectorXcd> y(rx_digital.samples.data() + r0, u.rows());
            g.noalias() += u.adjoint() * u;
            h.noalias() += u.adjoint() * y;
        });
        const Eigen::LDLT<Eigen::MatrixXcd> ldlt(g);
        if (ldlt.info() != Eigen::Success) throw DegeneracyError({}, "oracle normal equations are singular");
        out.model.coeffs = ldlt.solve(h);
        for_each_chunk(first, stop, [&](std::size_t r0, const RowMatrix& u) {
            const Eigen::VectorXcd fitv = u * out.model.coeffs;
            for (Eigen::Index r = 0; r < u.rows(); ++r) {
                const std::size_t i = r0 + static_cast<std::size_t>(r);
                residual[i] = rx_digital[i] - fitv(r);
            }
        });
        out.coeff_trace.push_back({stop, out.model.coeffs});
    }

    out.report.post_power_db = to_db(mean_power(std::span<const cplx>(residual).subspan(mbegin, mend - mbegin)));
    out.report.suppression_db = out.report.pre_power_db - out.report.post_power_db;
    out.residual = ComplexSignal(std::move(residual), rx_digital.sample_rate_hz);
    return out;
}

} // namespace sicsim
