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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <numeric>

#include "test_support.hpp"
#include "waveloc/common.hpp"
#include "waveloc/nn/gradcheck.hpp"
#include "waveloc/nn/network.hpp"
#include "waveloc/nn/optim.hpp"

namespace waveloc::nn {
namespace {

constexpr RunOptions kInfer{Mode::kInfer, 0};

std::vector<double> run(const Network<double>& net, const std::vector<double>& x, std::size_t batch,
                        RunOptions opts = kInfer) {
  Trace<double> trace;
  net.forward(x, batch, opts, trace);
  const auto out = trace.output();
  return {out.begin(), out.end()};
}

void randomise(Network<double>& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    for (auto& p : net.layer(i).params()) {
      for (double& v : p.value.data) v = normal(rng);
    }
  }
}

// Direct-loop grouped convolution with zero "same" padding along time.
std::vector<double> conv_oracle(const std::vector<double>& x, Shape in, const Tensor<double>& w,
                                const std::vector<double>& bias, std::size_t groups) {
  const std::size_t units = w.shape[0], cin_g = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  const std::size_t out_h = in.height - kh + 1, pad = (kw - 1) / 2;
  const std::size_t cout_g = units / groups;
  std::vector<double> y(units * out_h * in.width, 0.0);
  for (std::size_t o = 0; o < units; ++o) {
    const std::size_t g = o / cout_g;
    for (std::size_t h = 0; h < out_h; ++h) {
      for (std::size_t t = 0; t < in.width; ++t) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (std::size_t ci = 0; ci < cin_g; ++ci) {
          for (std::size_t dh = 0; dh < kh; ++dh) {
            for (std::size_t k = 0; k < kw; ++k) {
              const long src = static_cast<long>(t + k) - static_cast<long>(pad);
              if (src < 0 || src >= static_cast<long>(in.width)) continue;
              const std::size_t c = g * cin_g + ci;
              acc += x[(c * in.height + h + dh) * in.width + static_cast<std::size_t>(src)] *
                     w.data[((o * cin_g + ci) * kh + dh) * kw + k];
            }
          }
        }
        y[(o * out_h + h) * in.width + t] = acc;
      }
    }
  }
  return y;
}

struct ConvCase {
  Shape in;
  LayerSpec spec;
  std::size_t groups;
};

TEST(AlignedVector, StorageIsCacheLineAligned) {
  for (std::size_t n : {1u, 3u, 17u, 1000u, 300000u}) {
    nn::AlignedVector<float> v(n, 1.0f);
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(v.data()) % 64, 0u) << n;
    v.resize(2 * n + 1, 2.0f);
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(v.data()) % 64, 0u) << n;
    EXPECT_EQ(v[n - 1], 1.0f);
    EXPECT_EQ(v[2 * n], 2.0f);
  }
}

TEST(Conv, ForwardMatchesDirectLoops) {
  const std::vector<ConvCase> cases{
      {Shape{1, 2, 21}, time_conv(3, 7), 1},
      {Shape{1, 2, 20}, time_conv(2, 6), 1},
      {Shape{4, 2, 15}, ear_conv2d(6, 5, Activation::kLinear, 2), 2},
      {Shape{6, 1, 12}, conv1d(9, 4, Activation::kLinear, 3), 3},
      {Shape{3, 1, 9}, conv1d(2, 3, Activation::kLinear), 1},
  };
  for (const auto& c : cases) {
    Network<double> net(c.in);
    net.add(c.spec);
    randomise(net, 11);
    const auto x = testing::gaussian_noise(2 * c.in.size(), 4);
    const auto y = run(net, x, 2);
    const auto& params = net.layer(0).params();
    std::vector<double> bias;
    if (params.size() > 1) bias.assign(params[1].value.data.begin(), params[1].value.data.end());
    for (std::size_t b = 0; b < 2; ++b) {
      const std::vector<double> xb(x.begin() + b * c.in.size(), x.begin() + (b + 1) * c.in.size());
      const auto expected = conv_oracle(xb, c.in, params[0].value, bias, c.groups);
      const std::size_t n = expected.size();
      ASSERT_EQ(y.size(), 2 * n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[b * n + i], expected[i], 1e-12);
    }
  }
}

TEST(Conv, RejectsInconsistentShapes) {
  Network<double> net(Shape{3, 1, 10});
  EXPECT_THROW(net.add(conv1d(4, 3, Activation::kRelu, 2)), ConfigError);
  Network<double> one_ear(Shape{2, 1, 10});
  EXPECT_THROW(one_ear.add(ear_conv2d(4, 3, Activation::kRelu)), ConfigError);
}

TEST(MaxPool, FloorLengthAndFirstIndexTies) {
  Network<double> net(Shape{1, 1, 10});
  net.add(max_pool(4));
  EXPECT_EQ(net.output_shape(), (Shape{1, 1, 2}));
  const std::vector<double> x{1, 3, 3, 2, 5, 0, 5, -1, 9, 9};
  Trace<double> trace;
  net.forward(x, 1, kInfer, trace);
  EXPECT_EQ(std::vector<double>(trace.output().begin(), trace.output().end()),
            (std::vector<double>{3, 5}));
  // Gradient goes to the first maximum only.
  Network<double> cls(Shape{1, 1, 8});
  cls.add(max_pool(4)).add(softmax());
  const std::vector<double> y{1, 3, 3, 2, 5, 0, 5, -1};
  cls.forward(y, 1, kInfer, trace);
  auto grads = cls.zero_gradients();
  std::vector<std::vector<double>> act;
  const std::vector<int> label{0};
  cls.backward(trace, label, grads, &act);
  ASSERT_EQ(act[0].size(), 8u);
  EXPECT_NE(act[0][1], 0.0);
  EXPECT_EQ(act[0][2], 0.0);
  EXPECT_NE(act[0][4], 0.0);
  EXPECT_EQ(act[0][6], 0.0);
  for (std::size_t i : {0u, 3u, 5u, 7u}) EXPECT_EQ(act[0][i], 0.0);
}

TEST(PeakNormalise, DividesByFramePeak) {
  Network<double> net(Shape{2, 2, 3});
  net.add(peak_normalise());
  std::vector<double> x(24);
  std::iota(x.begin(), x.end(), -5.0);
  x[20] = -40.0;
  const auto y = run(net, x, 2);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(y[i], x[i] / 6.0);
  for (std::size_t i = 12; i < 24; ++i) EXPECT_DOUBLE_EQ(y[i], x[i] / 40.0);
  const auto zeros = run(net, std::vector<double>(12, 0.0), 1);
  for (double v : zeros) EXPECT_EQ(v, 0.0);
}

TEST(Dense, ZeroWeightsGiveUniformPosterior) {
  Network<double> net(Shape{1, 1, 5});
  net.add(dense(37, Activation::kLinear)).add(softmax());
  const auto y = run(net, testing::gaussian_noise(5, 1), 1);
  for (double v : y) EXPECT_NEAR(v, 1.0 / 37.0, 1e-15);
  Trace<double> trace;
  net.forward(testing::gaussian_noise(10, 2), 2, kInfer, trace);
  const std::vector<int> labels{3, 30};
  EXPECT_NEAR(net.loss(trace, labels), std::log(37.0), 1e-12);
}

TEST(Dense, ForwardMatchesMatrixProduct) {
  Network<double> net(Shape{1, 1, 4});
  net.add(dense(3, Activation::kSigmoid));
  randomise(net, 5);
  const auto x = testing::gaussian_noise(4, 3);
  const auto y = run(net, x, 1);
  const auto& w = net.layer(0).params()[0].value.data;
  const auto& b = net.layer(0).params()[1].value.data;
  for (std::size_t o = 0; o < 3; ++o) {
    double z = b[o];
    for (std::size_t i = 0; i < 4; ++i) z += w[o * 4 + i] * x[i];
    EXPECT_NEAR(y[o], 1.0 / (1.0 + std::exp(-z)), 1e-14);
  }
}

TEST(Dropout, InvertedScalingOnlyWhenTraining) {
  Network<double> net(Shape{1, 1, 1000});
  net.add(dropout(0.5));
  const std::vector<double> x(1000, 1.0);
  EXPECT_EQ(run(net, x, 1), x);
  const auto a = run(net, x, 1, RunOptions{Mode::kTrain, 7});
  const auto b = run(net, x, 1, RunOptions{Mode::kTrain, 7});
  const auto c = run(net, x, 1, RunOptions{Mode::kTrain, 8});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::size_t kept = 0;
  for (double v : a) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    kept += v != 0.0;
  }
  EXPECT_GT(kept, 400u);
  EXPECT_LT(kept, 600u);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Network<double> net(Shape{1, 1, 37});
  net.add(softmax());
  auto x = testing::gaussian_noise(3 * 37, 9);
  for (double& v : x) v *= 20.0;
  const auto y = run(net, x, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(std::accumulate(y.begin() + r * 37, y.begin() + (r + 1) * 37, 0.0), 1.0, 1e-12);
  }
  auto shifted = x;
  for (double& v : shifted) v += 123.0;
  const auto z = run(net, shifted, 3);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], z[i], 1e-12);
}

TEST(Backward, RejectsOutOfRangeLabels) {
  Network<double> net(Shape{1, 1, 4});
  net.add(dense(5, Activation::kLinear)).add(softmax());
  Trace<double> trace;
  net.forward(testing::gaussian_noise(4, 1), 1, kInfer, trace);
  auto grads = net.zero_gradients();
  const std::vector<int> bad{5};
  EXPECT_THROW(net.backward(trace, bad, grads), InputError);
}

TEST(Backward, FrozenLayersReceiveNoGradient) {
  Network<double> net(Shape{1, 2, 16});
  net.add(time_conv(3, 5, Activation::kLinear, false, false))
      .add(flatten_concat())
      .add(dense(4, Activation::kLinear))
      .add(softmax());
  net.initialise(1);
  randomise(net, 2);
  Trace<double> trace;
  net.forward(testing::gaussian_noise(64, 3), 2, kInfer, trace);
  auto grads = net.zero_gradients();
  const std::vector<int> labels{0, 3};
  net.backward(trace, labels, grads);
  for (const auto& t : grads[0]) {
    for (double v : t.data) EXPECT_EQ(v, 0.0);
  }
}

TEST(Initialise, GlorotBoundsAndZeroBias) {
  Network<double> net(Shape{1, 1, 30});
  net.add(dense(20, Activation::kRelu));
  net.initialise(42);
  const double limit = std::sqrt(6.0 / 50.0);
  double max_abs = 0.0;
  for (double v : net.layer(0).params()[0].value.data) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_LE(max_abs, limit);
  EXPECT_GT(max_abs, 0.8 * limit);
  for (double v : net.layer(0).params()[1].value.data) EXPECT_EQ(v, 0.0);
  Network<double> again(Shape{1, 1, 30});
  again.add(dense(20, Activation::kRelu));
  again.initialise(42);
  EXPECT_EQ(again.layer(0).params()[0].value.data, net.layer(0).params()[0].value.data);
}

TEST(Gradcheck, ReferenceModelsPass) {
  for (const auto& factory : reference_gradcheck_models()) {
    const auto report = gradcheck(factory);
    EXPECT_TRUE(report.passed()) << report.to_text();
    for (const auto& [kind, err] : report.max_error_by_kind()) EXPECT_LT(err, 1e-4);
  }
}

TEST(Gradcheck, FrozenLayerIsReportedSkipped) {
  const auto report = gradcheck(reference_gradcheck_models()[1]);
  ASSERT_FALSE(report.entries.empty());
  bool skipped = false;
  for (const auto& e : report.entries) {
    if (e.kind == LayerKind::kTimeConv) skipped = e.status == GradcheckStatus::kSkipped;
  }
  EXPECT_TRUE(skipped);
  EXPECT_NE(report.to_text().find("skipped"), std::string::npos);
}

// Textbook bias-corrected Adam, written independently of adam_step.
struct AdamOracle {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g, double lr = 1e-3) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    return p - lr * mh / (std::sqrt(vh) + 1e-8);
  }
};

void adam_once(OptimizerState<double>& state, std::vector<double>& p,
               const std::vector<double>& g) {
  const std::vector<std::span<double>> params{p};
  const std::vector<std::span<const double>> grads{g};
  adam_step<double>(state, params, grads);
}

TEST(Adam, FirstStepMatchesHandEvaluation) {
  OptimizerState<double> state;
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.5, -4.0};
  adam_once(state, p, g);
  EXPECT_EQ(state.step, 1u);
  EXPECT_NEAR(p[0], 1.0 - 1e-3 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], -2.0 + 1e-3 * 4.0 / (4.0 + 1e-8), 1e-15);
}

TEST(Adam, TracksOracleOverManySteps) {
  OptimizerState<double> state;
  std::vector<double> p{0.3};
  AdamOracle oracle;
  double q = 0.3;
  const auto grads = testing::gaussian_noise(200, 17);
  for (double g : grads) {
    adam_once(state, p, {g});
    q = oracle.step(q, g);
    ASSERT_NEAR(p[0], q, 1e-12);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  OptimizerState<double> state;
  std::vector<double> p{0.25, -1.5};
  adam_once(state, p, {0.0, 0.0});
  EXPECT_EQ(p, (std::vector<double>{0.25, -1.5}));
}

TEST(Adam, ConstantGradientApproachesLearningRateSign) {
  OptimizerState<double> state;
  std::vector<double> p{0.0, 0.0};
  double before0 = 0.0, before1 = 0.0;
  for (int i = 0; i < 2000; ++i) {
    before0 = p[0];
    before1 = p[1];
    adam_once(state, p, {0.3, -7.0});
  }
  EXPECT_NEAR(p[0] - before0, -1e-3, 1e-9);
  EXPECT_NEAR(p[1] - before1, 1e-3, 1e-9);
}

TEST(Adam, FrozenParametersAreBitIdentical) {
  Network<float> net(Shape{1, 2, 16});
  net.add(time_conv(3, 5, Activation::kLinear, false, false))
      .add(flatten_concat())
      .add(dense(4, Activation::kLinear))
      .add(softmax());
  net.initialise(3);
  for (float& v : net.layer(0).params()[0].value.data) v = 0.125f;
  const auto frozen = net.layer(0).params()[0].value.data;
  const auto dense_before = net.layer(2).params()[0].value.data;
  Adam<float> adam;
  Trace<float> trace;
  std::vector<float> x(64);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3f * static_cast<float>(i));
  for (int s = 0; s < 5; ++s) {
    net.forward(x, 2, RunOptions{Mode::kTrain, 0}, trace);
    auto grads = net.zero_gradients();
    const std::vector<int> labels{1, 2};
    net.backward(trace, labels, grads);
    adam.step(net, grads);
  }
  EXPECT_EQ(net.layer(0).params()[0].value.data, frozen);
  EXPECT_NE(net.layer(2).params()[0].value.data, dense_before);
}

TEST(Schedule, MonotoneImprovementContinues) {
  const TrainingSchedule s;
  const std::vector<double> h{1.0, 0.9, 0.8};
  const auto d = schedule_step(s, h);
  EXPECT_EQ(d.action, ScheduleAction::kContinue);
  EXPECT_DOUBLE_EQ(d.learning_rate, 1e-3);
  EXPECT_TRUE(d.improved);
  EXPECT_EQ(d.best_epoch, 2u);
}

TEST(Schedule, TwoFlatEpochsDecayLearningRate) {
  const TrainingSchedule s;
  const std::vector<double> h{1.0, 1.1, 1.2};
  const auto d = schedule_step(s, h);
  EXPECT_EQ(d.action, ScheduleAction::kContinue);
  EXPECT_NEAR(d.learning_rate, 2e-4, 1e-18);
  EXPECT_FALSE(d.improved);
  const std::vector<double> one{1.0, 1.1};
  EXPECT_DOUBLE_EQ(schedule_step(s, one).learning_rate, 1e-3);
}

TEST(Schedule, StopsAfterSixthNonImprovingEpoch) {
  const TrainingSchedule s;
  std::vector<double> h{1.0};
  for (int i = 1; i <= 6; ++i) {
    h.push_back(1.0);
    const auto d = schedule_step(s, h);
    if (i < 6) {
      EXPECT_EQ(d.action, ScheduleAction::kContinue) << i;
    } else {
      EXPECT_EQ(d.action, ScheduleAction::kStop);
      EXPECT_TRUE(d.restore_best);
      EXPECT_EQ(d.best_epoch, 0u);
    }
  }
}

TEST(Schedule, StopsAtMaxEpochsAndFloorsLearningRate) {
  const TrainingSchedule s;
  std::vector<double> h;
  for (int e = 0; e < 50; ++e) h.push_back(1.0 / (e + 1));
  EXPECT_EQ(schedule_step(s, std::span(h).first(49)).action, ScheduleAction::kContinue);
  EXPECT_EQ(schedule_step(s, h).action, ScheduleAction::kStop);

  TrainingSchedule quick;
  quick.early_stop_patience = 100;
  std::vector<double> flat(40, 1.0);
  EXPECT_DOUBLE_EQ(schedule_step(quick, flat).learning_rate, quick.min_lr);
}

TEST(Network, InferenceIsDeterministic) {
  Network<float> net(Shape{1, 2, 32});
  net.add(time_conv(4, 5))
      .add(max_pool(2))
      .add(ear_conv2d(4, 3, Activation::kRelu))
      .add(flatten_concat())
      .add(dense(8, Activation::kRelu))
      .add(dropout(0.5))
      .add(dense(37, Activation::kLinear))
      .add(softmax());
  net.initialise(9);
  std::vector<float> x(128);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(0.1f * static_cast<float>(i * i));
  EXPECT_EQ(net.predict(x, 2), net.predict(x, 2));
  EXPECT_THROW(net.predict(std::vector<float>(10), 1), ConfigError);
}

}  // namespace
}  // namespace waveloc::nn
