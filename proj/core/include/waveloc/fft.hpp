// Copyright 2026 The WaveLoc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace waveloc::dsp {

/// Real-input DFT of fixed length backed by FFTW. Not thread-safe per
/// instance; use `real_fft(n)` for a per-thread cached plan.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Zero-pads `in` (size <= n) and writes n/2+1 bins to `out`.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  std::vector<std::complex<double>> forward(std::span<const double> in);

  /// Inverse transform normalised by 1/n, so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

RealFft& real_fft(std::size_t n);

std::size_t next_pow2(std::size_t n);

/// Full linear convolution (length a+b-1) via FFT.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

}  // namespace waveloc::dsp
