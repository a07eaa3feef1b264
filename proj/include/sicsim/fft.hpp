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

#include <memory>

namespace sicsim {

// Unnormalized 1-D complex DFT of fixed length. Plans are built under a
// process-wide lock; execute() is safe to call from one thread per object.
class Fft {
public:
    enum class Direction { forward, inverse };

    Fft(std::size_t n, Direction dir);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const noexcept { return n_; }

    // in and out must both hold size() samples; they may alias.
    void execute(std::span<const cplx> in, std::span<cplx> out);

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

} // namespace sicsim
