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

#include "sicsim/signal.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace sicsim {

struct BasisLabel {
    int order = 1;
    int lag = 0;
    bool operator==(const BasisLabel&) const = default;
};

// Column (p, l) holds psi_p(x(n - l)) for n = first_sample + row. Columns are
// order-major, lags ascending from -memory_pre to memory_post.
struct BasisMatrix {
    Eigen::MatrixXcd columns;
    std::vector<BasisLabel> labels;
    std::size_t first_sample = 0;
};

std::vector<BasisLabel> basis_labels(int P, int memory_pre, int memory_post);

BasisMatrix build_basis(const ComplexSignal& x, int P, int memory_pre, int memory_post);

struct Orthogonalization {
    BasisMatrix ortho;
    // Upper triangular; ortho.columns = basis.columns * transform.
    Eigen::MatrixXcd transform;
    double raw_condition = 0.0;
    double ortho_condition = 0.0;
};

// Whitens the basis so that ortho^H ortho / rows = I. Throws DegeneracyError
// listing columns that are (numerically) in the span of earlier ones.
Orthogonalization orthogonalize(const BasisMatrix& basis);

// Condition number of the sample Gram matrix columns^H columns / rows.
double gram_condition(const Eigen::MatrixXcd& columns);

struct DigitalCancellerModel {
    int P = 11;
    int memory_pre = 2;
    int memory_post = 10;
    Eigen::MatrixXcd ortho_transform;
    Eigen::VectorXcd coeffs;
    // Step normalized by the instantaneous regressor energy.
    double mu = 0.25;
};

void validate(const DigitalCancellerModel& m);

struct CoeffSnapshot {
    std::size_t row = 0;
    Eigen::VectorXcd coeffs;
};

struct DcRunResult {
    ComplexSignal residual;
    std::vector<CoeffSnapshot> coeff_trace;
};

DcRunResult dc_lms_run(const ComplexSignal& rx_digital, const BasisMatrix& ortho, DigitalCancellerModel& model,
                       std::size_t trace_interval = 4096);

struct LsFit {
    Eigen::VectorXcd coeffs;
    double residual_power = 0.0;
    ComplexSignal residual;
};

LsFit dc_block_ls(const ComplexSignal& rx_digital, const BasisMatrix& ortho);

enum class DcMode { lms, oracle };

std::string to_string(DcMode m);

struct DigitalCancellerConfig {
    int P = 11;
    int memory_pre = 2;
    int memory_post = 10;
    double mu = 0.25;
    std::size_t fit_block = 16384;
    std::size_t fit_offset = 0;
    DcMode mode = DcMode::lms;
    // Oracle fit range and report window, in samples of rx.
    std::size_t measure_begin = 0;
    std::size_t measure_end = std::numeric_limits<std::size_t>::max();
    std::size_t trace_interval = 4096;
};

void validate(const DigitalCancellerConfig& cfg);

struct DigitalReport {
    DcMode mode = DcMode::lms;
    bool zero_reference = false;
    std::size_t columns = 0;
    double pre_power_db = 0.0;
    double post_power_db = 0.0;
    double suppression_db = 0.0;
    double raw_condition = 0.0;
    double ortho_condition = 0.0;
};

struct OriginalCoefficient {
    BasisLabel label;
    cplx value;
};

struct CancelResult {
    ComplexSignal residual;
    DigitalReport report;
    DigitalCancellerModel model;
    std::vector<BasisLabel> labels;
    std::vector<CoeffSnapshot> coeff_trace;

    // Coefficients expressed on the raw (non-orthogonalized) basis.
    std::vector<OriginalCoefficient> original_coefficients() const;
};

// Whitening is fit on fit_block samples of tx_data and then applied streaming.
// Edge samples without a full regressor pass through uncancelled.
CancelResult cancel(const ComplexSignal& rx_digital, const ComplexSignal& tx_data, const DigitalCancellerConfig& cfg);

} // namespace sicsim
