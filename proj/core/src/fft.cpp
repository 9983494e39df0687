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

#include "waveloc/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace waveloc::dsp {
namespace {

// FFTW planning touches global state.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(real);
    fftw_free(spectrum);
  }
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n < 2) throw std::invalid_argument("RealFft: size must be >= 2");
  std::lock_guard lock(planner_mutex());
  plans_->real = fftw_alloc_real(n);
  plans_->spectrum = fftw_alloc_complex(n / 2 + 1);
  const int len = static_cast<int>(n);
  plans_->fwd = fftw_plan_dft_r2c_1d(len, plans_->real, plans_->spectrum, FFTW_ESTIMATE);
  plans_->inv = fftw_plan_dft_c2r_1d(len, plans_->spectrum, plans_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() > n_ || out.size() < bins()) {
    throw std::invalid_argument("RealFft::forward: bad buffer sizes");
  }
  std::copy(in.begin(), in.end(), plans_->real);
  std::fill(plans_->real + in.size(), plans_->real + n_, 0.0);
  fftw_execute(plans_->fwd);
  std::memcpy(static_cast<void*>(out.data()), plans_->spectrum, bins() * sizeof(fftw_complex));
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> in) {
  std::vector<std::complex<double>> out(bins());
  forward(in, out);
  return out;
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() < bins() || out.size() < n_) {
    throw std::invalid_argument("RealFft::inverse: bad buffer sizes");
  }
  // c2r destroys its input, hence the copy into the plan's own buffer.
  std::memcpy(plans_->spectrum, in.data(), bins() * sizeof(fftw_complex));
  fftw_execute(plans_->inv);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = plans_->real[i] * scale;
}

RealFft& real_fft(std::size_t n) {
  thread_local std::map<std::size_t, RealFft> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, RealFft(n)).first;
  return it->second;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(std::max<std::size_t>(out_len, 2));
  RealFft& fft = real_fft(n);
  auto fa = fft.forward(a);
  const auto fb = fft.forward(b);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> full(n);
  fft.inverse(fa, full);
  full.resize(out_len);
  return full;
}

}  // namespace waveloc::dsp
