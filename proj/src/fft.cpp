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

#include "sicsim/fft.hpp"

#include "sicsim/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace sicsim {

namespace {
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace

struct Fft::Impl {
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;
};

Fft::Fft(std::size_t n, Direction dir) : n_(n), impl_(std::make_unique<Impl>())
{
    if (n == 0) throw ArgumentError("FFT length must be positive");
    std::lock_guard<std::mutex> lock(planner_mutex());
    impl_->buf = fftw_alloc_complex(n);
    impl_->plan = fftw_plan_dft_1d(static_cast<int>(n), impl_->buf, impl_->buf,
                                   dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
}

Fft::~Fft()
{
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (impl_->plan) fftw_destroy_plan(impl_->plan);
    if (impl_->buf) fftw_free(impl_->buf);
}

void Fft::execute(std::span<const cplx> in, std::span<cplx> out)
{
    if (in.size() != n_ || out.size() != n_) throw ArgumentError("FFT buffer length mismatch");
    auto* b = reinterpret_cast<cplx*>(impl_->buf);
    std::copy(in.begin(), in.end(), b);
    fftw_execute(impl_->plan);
    std::copy(b, b + n_, out.begin());
}

} // namespace sicsim
