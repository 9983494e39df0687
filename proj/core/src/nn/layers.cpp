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

#include "waveloc/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "waveloc/common.hpp"

namespace waveloc::nn {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

// Upper bound on im2col scratch per micro-batch, in elements.
constexpr std::size_t kColBudget = std::size_t{1} << 22;

template <typename T>
void apply_activation(Activation act, std::span<T> x) {
  switch (act) {
    case Activation::kLinear: break;
    case Activation::kRelu:
      for (T& v : x) v = v > T{0} ? v : T{0};
      break;
    case Activation::kSigmoid:
      for (T& v : x) v = T{1} / (T{1} + std::exp(-v));
      break;
  }
}

template <typename T>
T activation_slope(Activation act, T out) {
  switch (act) {
    case Activation::kRelu: return out > T{0} ? T{1} : T{0};
    case Activation::kSigmoid: return out * (T{1} - out);
    case Activation::kLinear: break;
  }
  return T{1};
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(LayerSpec spec, Shape in) : Layer<T>(spec, in) {
    const std::size_t g = spec.groups;
    if (spec.units == 0 || g == 0 || in.channels % g != 0 || spec.units % g != 0) {
      throw ConfigError("conv: channel counts must be positive multiples of groups");
    }
    if (spec.kernel_width == 0 || spec.kernel_height == 0 || spec.kernel_height > in.height) {
      throw ConfigError("conv: kernel " + std::to_string(spec.kernel_height) + "x" +
                        std::to_string(spec.kernel_width) + " does not fit input " + to_string(in));
    }
    if (spec.kind == LayerKind::kEarConv2d && spec.kernel_height != in.height) {
      throw ConfigError("ear_conv2d must span the full ear axis");
    }
    if (spec.kind != LayerKind::kEarConv2d && spec.kernel_height != 1) {
      throw ConfigError("time_conv/conv1d kernels have height 1");
    }
    this->output_ = Shape{spec.units, in.height - spec.kernel_height + 1, in.width};
    cin_g_ = in.channels / g;
    cout_g_ = spec.units / g;
    rows_ = cin_g_ * spec.kernel_height * spec.kernel_width;
    pad_ = (spec.kernel_width - 1) / 2;
    this->params_.push_back({"kernel",
                             Tensor<T>({spec.units, cin_g_, spec.kernel_height, spec.kernel_width}),
                             spec.trainable});
    if (spec.bias) this->params_.push_back({"bias", Tensor<T>({spec.units}), spec.trainable});
  }

  void forward(std::span<const T> in, std::span<T> out, std::size_t batch, const RunOptions&,
               std::uint64_t, LayerState<T>&) const override {
    const Shape is = this->input_, os = this->output_;
    const std::size_t positions = os.height * os.width;
    const std::size_t mb_max = micro_batch();
    AlignedVector<T> col;
    MatR<T> y;
    for (std::size_t s0 = 0; s0 < batch; s0 += mb_max) {
      const std::size_t mb = std::min(mb_max, batch - s0);
      const std::size_t cols = mb * positions;
      for (std::size_t g = 0; g < this->spec_.groups; ++g) {
        im2col(in.subspan(s0 * is.size()), mb, g, col);
        CMapR<T> colm(col.data(), rows_, cols);
        CMapR<T> w(this->params_[0].value.data.data() + g * cout_g_ * rows_, cout_g_, rows_);
        y.noalias() = w * colm;
        for (std::size_t s = 0; s < mb; ++s) {
          for (std::size_t o = 0; o < cout_g_; ++o) {
            const std::size_t co = g * cout_g_ + o;
            const T b = this->spec_.bias ? this->params_[1].value.data[co] : T{0};
            T* dst = out.data() + (s0 + s) * os.size() + co * positions;
            const T* src = y.data() + o * cols + s * positions;
            for (std::size_t p = 0; p < positions; ++p) dst[p] = src[p] + b;
          }
        }
      }
    }
    apply_activation(this->spec_.activation, out.first(batch * os.size()));
  }

  void backward(std::span<const T> in, std::span<const T> out, std::span<const T> dout,
                std::span<T> din, std::size_t batch, const LayerState<T>&,
                std::span<Tensor<T>> grads) const override {
    const Shape is = this->input_, os = this->output_;
    const std::size_t positions = os.height * os.width;
    const std::size_t mb_max = micro_batch();
    const bool want_din = !din.empty();
    if (want_din) std::fill(din.begin(), din.begin() + batch * is.size(), T{0});
    AlignedVector<T> col;
    MatR<T> dy, dcol;
    for (std::size_t s0 = 0; s0 < batch; s0 += mb_max) {
      const std::size_t mb = std::min(mb_max, batch - s0);
      const std::size_t cols = mb * positions;
      for (std::size_t g = 0; g < this->spec_.groups; ++g) {
        dy.resize(cout_g_, cols);
        for (std::size_t s = 0; s < mb; ++s) {
          for (std::size_t o = 0; o < cout_g_; ++o) {
            const std::size_t at = (s0 + s) * os.size() + (g * cout_g_ + o) * positions;
            T* dst = dy.data() + o * cols + s * positions;
            for (std::size_t p = 0; p < positions; ++p) {
              dst[p] = dout[at + p] * activation_slope(this->spec_.activation, out[at + p]);
            }
          }
        }
        if (this->spec_.trainable) {
          im2col(in.subspan(s0 * is.size()), mb, g, col);
          CMapR<T> colm(col.data(), rows_, cols);
          MapR<T> dw(grads[0].data.data() + g * cout_g_ * rows_, cout_g_, rows_);
          dw.noalias() += dy * colm.transpose();
          if (this->spec_.bias) {
            for (std::size_t o = 0; o < cout_g_; ++o) {
              grads[1].data[g * cout_g_ + o] += dy.row(static_cast<Eigen::Index>(o)).sum();
            }
          }
        }
        if (want_din) {
          CMapR<T> w(this->params_[0].value.data.data() + g * cout_g_ * rows_, cout_g_, rows_);
          dcol.noalias() = w.transpose() * dy;
          col2im(dcol.data(), mb, g, din.subspan(s0 * is.size()));
        }
      }
    }
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConvLayer>(*this); }

 private:
  std::size_t micro_batch() const {
    const std::size_t per_item = rows_ * this->output_.height * this->output_.width;
    return std::max<std::size_t>(1, kColBudget / std::max<std::size_t>(per_item, 1));
  }

  // col(r, s*P + h*W + t) = in[s][g*cin_g + c][h + i][t + j - pad], r = (c, i, j).
  void im2col(std::span<const T> in, std::size_t mb, std::size_t g, AlignedVector<T>& col) const {
    const Shape is = this->input_, os = this->output_;
    const std::size_t kh = this->spec_.kernel_height, kw = this->spec_.kernel_width;
    const std::size_t positions = os.height * os.width;
    const std::size_t cols = mb * positions;
    const std::ptrdiff_t width = static_cast<std::ptrdiff_t>(is.width);
    col.resize(rows_ * cols);
    for (std::size_t c = 0; c < cin_g_; ++c) {
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          const std::size_t r = (c * kh + i) * kw + j;
          const std::ptrdiff_t shift =
              static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad_);
          const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(width, width - shift);
          for (std::size_t s = 0; s < mb; ++s) {
            for (std::size_t h = 0; h < os.height; ++h) {
              T* dst = col.data() + r * cols + s * positions + h * is.width;
              const T* src =
                  in.data() + s * is.size() + ((g * cin_g_ + c) * is.height + h + i) * is.width;
              std::fill(dst, dst + t0, T{0});
              if (t1 > t0) std::copy(src + t0 + shift, src + t1 + shift, dst + t0);
              std::fill(dst + std::max(t0, t1), dst + width, T{0});
            }
          }
        }
      }
    }
  }

  void col2im(const T* dcol, std::size_t mb, std::size_t g, std::span<T> din) const {
    const Shape is = this->input_, os = this->output_;
    const std::size_t kh = this->spec_.kernel_height, kw = this->spec_.kernel_width;
    const std::size_t positions = os.height * os.width;
    const std::size_t cols = mb * positions;
    const std::ptrdiff_t width = static_cast<std::ptrdiff_t>(is.width);
    for (std::size_t c = 0; c < cin_g_; ++c) {
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          const std::size_t r = (c * kh + i) * kw + j;
          const std::ptrdiff_t shift =
              static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad_);
          const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(width, width - shift);
          for (std::size_t s = 0; s < mb; ++s) {
            for (std::size_t h = 0; h < os.height; ++h) {
              const T* src = dcol + r * cols + s * positions + h * is.width;
              T* dst =
                  din.data() + s * is.size() + ((g * cin_g_ + c) * is.height + h + i) * is.width;
              for (std::ptrdiff_t t = t0; t < t1; ++t) dst[t + shift] += src[t];
            }
          }
        }
      }
    }
  }

  std::size_t cin_g_ = 0, cout_g_ = 0, rows_ = 0, pad_ = 0;
};

// ---------------------------------------------------------------------------

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  MaxPoolLayer(LayerSpec spec, Shape in) : Layer<T>(spec, in) {
    if (spec.pool_width == 0 || in.width / spec.pool_width == 0) {
      throw ConfigError("max_pool: width " + std::to_string(spec.pool_width) +
                        " too large for input " + to_string(in));
    }
    this->output_ = Shape{in.channels, in.height, in.width / spec.pool_width};
  }

  void forward(std::span<const T> in, std::span<T> out, std::size_t batch, const RunOptions&,
               std::uint64_t, LayerState<T>& state) const override {
    const Shape is = this->input_, os = this->output_;
    const std::size_t w = this->spec_.pool_width;
    const std::size_t rows = is.channels * is.height;
    state.indices.resize(batch * os.size());
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t r = 0; r < rows; ++r) {
        const T* src = in.data() + s * is.size() + r * is.width;
        for (std::size_t o = 0; o < os.width; ++o) {
          std::size_t best = o * w;
          for (std::size_t k = best + 1; k < (o + 1) * w; ++k) {
            if (src[k] > src[best]) best = k;
          }
          const std::size_t at = s * os.size() + r * os.width + o;
          out[at] = src[best];
          state.indices[at] = static_cast<std::uint32_t>(r * is.width + best);
        }
      }
    }
  }

  void backward(std::span<const T>, std::span<const T>, std::span<const T> dout, std::span<T> din,
                std::size_t batch, const LayerState<T>& state,
                std::span<Tensor<T>>) const override {
    if (din.empty()) return;
    const Shape is = this->input_, os = this->output_;
    std::fill(din.begin(), din.begin() + batch * is.size(), T{0});
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t k = 0; k < os.size(); ++k) {
        const std::size_t at = s * os.size() + k;
        din[s * is.size() + state.indices[at]] += dout[at];
      }
    }
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPoolLayer>(*this); }
};

// ---------------------------------------------------------------------------

template <typename T>
class PeakNormaliseLayer final : public Layer<T> {
 public:
  static constexpr T kFloor = T(1e-12);

  PeakNormaliseLayer(LayerSpec spec, Shape in) : Layer<T>(spec, in) { this->output_ = in; }

  void forward(std::span<const T> in, std::span<T> out, std::size_t batch, const RunOptions&,
               std::uint64_t, LayerState<T>& state) const override {
    const std::size_t n = this->input_.size();
    state.indices.resize(batch);
    state.values.resize(batch);
    for (std::size_t s = 0; s < batch; ++s) {
      const T* x = in.data() + s * n;
      std::size_t arg = 0;
      T peak = T{0};
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(x[i]) > peak) {
          peak = std::abs(x[i]);
          arg = i;
        }
      }
      const T divisor = std::max(peak, kFloor);
      state.indices[s] = static_cast<std::uint32_t>(arg);
      state.values[s] = divisor;
      for (std::size_t i = 0; i < n; ++i) out[s * n + i] = x[i] / divisor;
    }
  }

  void backward(std::span<const T> in, std::span<const T>, std::span<const T> dout,
                std::span<T> din, std::size_t batch, const LayerState<T>& state,
                std::span<Tensor<T>>) const override {
    if (din.empty()) return;
    const std::size_t n = this->input_.size();
    for (std::size_t s = 0; s < batch; ++s) {
      const T m = state.values[s];
      const T* x = in.data() + s * n;
      const T* g = dout.data() + s * n;
      T dot = T{0};
      for (std::size_t i = 0; i < n; ++i) {
        din[s * n + i] = g[i] / m;
        dot += g[i] * x[i];
      }
      const std::size_t j = state.indices[s];
      if (std::abs(x[j]) > kFloor) {
        const T sign = x[j] > T{0} ? T{1} : T{-1};
        din[s * n + j] -= sign * dot / (m * m);
      }
    }
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<PeakNormaliseLayer>(*this);
  }
};

// ---------------------------------------------------------------------------

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  FlattenLayer(LayerSpec spec, Shape in) : Layer<T>(spec, in) {
    this->output_ = Shape{in.size(), 1, 1};
  }

  void forward(std::span<const T> in, std::span<T> out, std::size_t batch, const RunOptions&,
               std::uint64_t, LayerState<T>&) const override {
    std::copy_n(in.begin(), batch * this->input_.size(), out.begin());
  }

  void backward(std::span<const T>, std::span<const T>, std::span<const T> dout, std::span<T> din,
                std::size_t batch, const LayerState<T>&, std::span<Tensor<T>>) const override {
    if (!din.empty()) std::copy_n(dout.begin(), batch * this->input_.size(), din.begin());
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<FlattenLayer>(*this); }
};

// ---------------------------------------------------------------------------

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(LayerSpec spec, Shape in) : Layer<T>(spec, in) {
    if (spec.units == 0) throw ConfigError("dense: zero units");
    this->output_ = Shape{spec.units, 1, 1};
    this->params_.push_back({"kernel", Tensor<T>({spec.units, in.size()}), spec.trainable});
    if (spec.bias) this->params_.push_back({"bias", Tensor<T>({spec.units}), spec.trainable});
  }

  void forward(std::span<const T> in, std::span<T> out, std::size_t batch, const RunOptions&,
               std::uint64_t, LayerState<T>&) const override {
    const auto n = static_cast<Eigen::Index>(this->input_.size());
    const auto m = static_cast<Eigen::Index>(this->spec_.units);
    const auto b = static_cast<Eigen::Index>(batch);
    CMapR<T> x(in.data(), b, n);
    CMapR<T> w(this->params_[0].value.data.data(), m, n);
    MapR<T> y(out.data(), b, m);
    y.noalias() = x * w.transpose();
    if (this->spec_.bias) {
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(this->params_[1].value.data.data(),
                                                                 m);
      y.rowwise() += bias;
    }
    apply_activation(this->spec_.activation, out.first(batch * this->spec_.units));
  }

  void backward(std::span<const T> in, std::span<const T> out, std::span<const T> dout,
                std::span<T> din, std::size_t batch, const LayerState<T>&,
                std::span<Tensor<T>> grads) const override {
    const auto n = static_cast<Eigen::Index>(this->input_.size());
    const auto m = static_cast<Eigen::Index>(this->spec_.units);
    const auto b = static_cast<Eigen::Index>(batch);
    MatR<T> dz(b, m);
    for (Eigen::Index i = 0; i < b * m; ++i) {
      dz.data()[i] = dout[static_cast<std::size_t>(i)] *
                     activation_slope(this->spec_.activation, out[static_cast<std::size_t>(i)]);
    }
    CMapR<T> x(in.data(), b, n);
    if (this->spec_.trainable) {
      MapR<T> dw(grads[0].data.data(), m, n);
      dw.noalias() += dz.transpose() * x;
      if (this->spec_.bias) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(grads[1].data.data(), m);
        db += dz.colwise().sum();
      }
    }
    if (!din.empty()) {
      CMapR<T> w(this->params_[0].value.data.data(), m, n);
      MapR<T> dx(din.data(), b, n);
      dx.noalias() = dz * w;
    }
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DenseLayer>(*this); }
};

// ---------------------------------------------------------------------------

template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  DropoutLayer(LayerSpec spec, Shape in) : Layer<T>(spec, in) {
    if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) {
      throw ConfigError("dropout rate must lie in [0, 1)");
    }
    this->output_ = in;
  }

  void forward(std::span<const T> in, std::span<T> out, std::size_t batch, const RunOptions& opts,
               std::uint64_t layer_index, LayerState<T>& state) const override {
    const std::size_t n = batch * this->input_.size();
    if (opts.mode == Mode::kInfer || this->spec_.dropout_rate == 0.0) {
      std::copy_n(in.begin(), n, out.begin());
      state.values.clear();
      return;
    }
    const double rate = this->spec_.dropout_rate;
    const T scale = T(1.0 / (1.0 - rate));
    std::uint64_t rng = opts.dropout_seed ^ (0xD1B54A32D192ED03ULL * (layer_index + 1));
    state.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(splitmix64(rng) >> 11) * 0x1.0p-53;
      state.values[i] = u >= rate ? scale : T{0};
      out[i] = in[i] * state.values[i];
    }
  }

  void backward(std::span<const T>, std::span<const T>, std::span<const T> dout, std::span<T> din,
                std::size_t batch, const LayerState<T>& state,
                std::span<Tensor<T>>) const override {
    if (din.empty()) return;
    const std::size_t n = batch * this->input_.size();
    if (state.values.empty()) {
      std::copy_n(dout.begin(), n, din.begin());
      return;
    }
    for (std::size_t i = 0; i < n; ++i) din[i] = dout[i] * state.values[i];
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DropoutLayer>(*this); }
};

// ---------------------------------------------------------------------------

template <typename T>
class SoftmaxLayer final : public Layer<T> {
 public:
  SoftmaxLayer(LayerSpec spec, Shape in) : Layer<T>(spec, in) {
    this->output_ = Shape{in.size(), 1, 1};
  }

  void forward(std::span<const T> in, std::span<T> out, std::size_t batch, const RunOptions&,
               std::uint64_t, LayerState<T>&) const override {
    const std::size_t n = this->input_.size();
    for (std::size_t s = 0; s < batch; ++s) {
      const T* z = in.data() + s * n;
      T* p = out.data() + s * n;
      const T peak = *std::max_element(z, z + n);
      T total = T{0};
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(z[i] - peak);
        total += p[i];
      }
      for (std::size_t i = 0; i < n; ++i) p[i] /= total;
    }
  }

  void backward(std::span<const T>, std::span<const T> out, std::span<const T> dout,
                std::span<T> din, std::size_t batch, const LayerState<T>&,
                std::span<Tensor<T>>) const override {
    if (din.empty()) return;
    const std::size_t n = this->input_.size();
    for (std::size_t s = 0; s < batch; ++s) {
      const T* p = out.data() + s * n;
      const T* g = dout.data() + s * n;
      T dot = T{0};
      for (std::size_t i = 0; i < n; ++i) dot += g[i] * p[i];
      for (std::size_t i = 0; i < n; ++i) din[s * n + i] = p[i] * (g[i] - dot);
    }
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<SoftmaxLayer>(*this); }
};

}  // namespace

std::string to_string(const Shape& shape) {
  return std::to_string(shape.channels) + "x" + std::to_string(shape.height) + "x" +
         std::to_string(shape.width);
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kTimeConv: return "time_conv";
    case LayerKind::kEarConv2d: return "ear_conv2d";
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kMaxPool: return "max_pool";
    case LayerKind::kPeakNormalise: return "peak_normalise";
    case LayerKind::kFlattenConcat: return "flatten_concat";
    case LayerKind::kDense: return "dense";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

LayerSpec time_conv(std::size_t filters, std::size_t width, Activation act, bool trainable,
                    bool bias) {
  LayerSpec s;
  s.kind = LayerKind::kTimeConv;
  s.units = filters;
  s.kernel_width = width;
  s.activation = act;
  s.trainable = trainable;
  s.bias = bias;
  return s;
}

LayerSpec ear_conv2d(std::size_t filters, std::size_t width, Activation act, std::size_t groups) {
  LayerSpec s;
  s.kind = LayerKind::kEarConv2d;
  s.units = filters;
  s.kernel_height = kNumEars;
  s.kernel_width = width;
  s.activation = act;
  s.groups = groups;
  return s;
}

LayerSpec conv1d(std::size_t filters, std::size_t width, Activation act, std::size_t groups) {
  LayerSpec s;
  s.kind = LayerKind::kConv1d;
  s.units = filters;
  s.kernel_width = width;
  s.activation = act;
  s.groups = groups;
  return s;
}

LayerSpec max_pool(std::size_t width) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool;
  s.pool_width = width;
  s.trainable = false;
  return s;
}

LayerSpec peak_normalise() {
  LayerSpec s;
  s.kind = LayerKind::kPeakNormalise;
  s.trainable = false;
  return s;
}

LayerSpec flatten_concat() {
  LayerSpec s;
  s.kind = LayerKind::kFlattenConcat;
  s.trainable = false;
  return s;
}

LayerSpec dense(std::size_t units, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.units = units;
  s.activation = act;
  return s;
}

LayerSpec dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.dropout_rate = rate;
  s.trainable = false;
  return s;
}

LayerSpec softmax() {
  LayerSpec s;
  s.kind = LayerKind::kSoftmax;
  s.trainable = false;
  return s;
}

template <typename T>
bool Layer<T>::has_trainable_params() const {
  return std::any_of(params_.begin(), params_.end(), [](const auto& p) { return p.trainable; });
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, Shape input) {
  if (input.size() == 0) throw ConfigError("layer input has zero size");
  switch (spec.kind) {
    case LayerKind::kTimeConv:
    case LayerKind::kEarConv2d:
    case LayerKind::kConv1d: return std::make_unique<ConvLayer<T>>(spec, input);
    case LayerKind::kMaxPool: return std::make_unique<MaxPoolLayer<T>>(spec, input);
    case LayerKind::kPeakNormalise: return std::make_unique<PeakNormaliseLayer<T>>(spec, input);
    case LayerKind::kFlattenConcat: return std::make_unique<FlattenLayer<T>>(spec, input);
    case LayerKind::kDense: return std::make_unique<DenseLayer<T>>(spec, input);
    case LayerKind::kDropout: return std::make_unique<DropoutLayer<T>>(spec, input);
    case LayerKind::kSoftmax: return std::make_unique<SoftmaxLayer<T>>(spec, input);
  }
  throw ConfigError("unknown layer kind");
}

template class Layer<float>;
template class Layer<double>;
template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&, Shape);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&, Shape);

}  // namespace waveloc::nn
