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

#include "waveloc/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "waveloc/common.hpp"

namespace waveloc::nn {
namespace {

double rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

std::vector<std::size_t> pick_elements(std::size_t n, std::size_t limit, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n > limit) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(limit);
  }
  return idx;
}

}  // namespace

bool GradcheckReport::passed() const {
  return std::none_of(entries.begin(), entries.end(),
                      [](const auto& e) { return e.status == GradcheckStatus::kFail; });
}

std::vector<std::pair<LayerKind, double>> GradcheckReport::max_error_by_kind() const {
  std::map<LayerKind, double> worst;
  for (const auto& e : entries) {
    if (e.status == GradcheckStatus::kSkipped) continue;
    worst[e.kind] = std::max(worst[e.kind], e.max_rel_error);
  }
  return {worst.begin(), worst.end()};
}

std::string GradcheckReport::to_text() const {
  std::map<LayerKind, std::pair<double, int>> by_kind;  // worst error, status
  for (const auto& e : entries) {
    auto [it, fresh] = by_kind.try_emplace(e.kind, 0.0, 2);
    if (e.status != GradcheckStatus::kSkipped) {
      it->second.first = std::max(it->second.first, e.max_rel_error);
      it->second.second = std::min(it->second.second, e.status == GradcheckStatus::kFail ? 0 : 1);
    }
  }
  std::ostringstream out;
  out.setf(std::ios::scientific);
  out.precision(3);
  for (const auto& [kind, v] : by_kind) {
    out << to_string(kind) << std::string(16 - to_string(kind).size(), ' ');
    if (v.second == 2) {
      out << "skipped (no trainable parameters)\n";
    } else {
      out << "max_rel_error " << v.first << "  " << (v.second == 1 ? "PASS" : "FAIL") << "\n";
    }
  }
  out << (passed() ? "PASS" : "FAIL") << " (tolerance " << tolerance << ")\n";
  return out.str();
}

GradcheckReport gradcheck(const std::function<Network<double>(std::uint64_t seed)>& factory,
                          const GradcheckOptions& options) {
  GradcheckReport report;
  report.tolerance = options.tolerance;
  std::map<std::size_t, GradcheckEntry> merged;

  for (int trial = 0; trial < options.trials; ++trial) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(trial);
    Network<double> net = factory(seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t batch = options.batch;
    std::vector<double> input(batch * net.input_shape().size());
    for (double& v : input) v = normal(rng);
    const auto classes = static_cast<int>(net.output_shape().size());
    std::vector<int> labels(batch);
    for (int& l : labels) l = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));

    const RunOptions opts{Mode::kTrain, seed * 7919};
    Trace<double> trace;
    net.forward(input, batch, opts, trace);
    Gradients<double> grads = net.zero_gradients();
    std::vector<std::vector<double>> act_grads;
    net.backward(trace, labels, grads, &act_grads);

    const auto loss_after = [&](Trace<double>& t, std::size_t from) {
      net.forward_from(from, opts, t);
      return net.loss(t, labels);
    };

    for (std::size_t li = 0; li < net.num_layers(); ++li) {
      Layer<double>& layer = net.layer(li);
      GradcheckEntry entry;
      entry.layer = li;
      entry.kind = layer.kind();
      const bool frozen = !layer.params().empty() && !layer.has_trainable_params();
      if (frozen) {
        entry.status = GradcheckStatus::kSkipped;
        merged.try_emplace(li, entry);
        continue;
      }

      for (std::size_t p = 0; p < layer.params().size(); ++p) {
        auto& values = layer.params()[p].value.data;
        for (std::size_t k : pick_elements(values.size(), options.max_elements, rng)) {
          const double saved = values[k];
          Trace<double> t = trace;
          values[k] = saved + options.step;
          const double up = loss_after(t, li);
          values[k] = saved - options.step;
          const double down = loss_after(t, li);
          values[k] = saved;
          const double numeric = (up - down) / (2.0 * options.step);
          entry.max_rel_error =
              std::max(entry.max_rel_error,
                       rel_error(grads[li][p].data[k], numeric, options.denominator_floor));
          ++entry.elements_checked;
        }
      }

      const auto& analytic_in = act_grads[li];
      if (analytic_in.empty())
        throw Error("gradcheck: missing input gradient for layer " + std::to_string(li));
      for (double v : analytic_in) {
        if (!std::isfinite(v)) {
          throw Error("gradcheck: non-finite input gradient at layer " + std::to_string(li) + " (" +
                      std::string(to_string(layer.kind())) + ")");
        }
      }
      for (std::size_t k : pick_elements(analytic_in.size(), options.max_elements, rng)) {
        Trace<double> t = trace;
        const double saved = trace.activations[li][k];
        t.activations[li][k] = saved + options.step;
        const double up = loss_after(t, li);
        t.activations[li][k] = saved - options.step;
        const double down = loss_after(t, li);
        const double numeric = (up - down) / (2.0 * options.step);
        entry.max_rel_error = std::max(
            entry.max_rel_error, rel_error(analytic_in[k], numeric, options.denominator_floor));
        ++entry.elements_checked;
      }

      entry.status =
          entry.max_rel_error < options.tolerance ? GradcheckStatus::kPass : GradcheckStatus::kFail;
      auto [it, fresh] = merged.try_emplace(li, entry);
      if (!fresh) {
        it->second.max_rel_error = std::max(it->second.max_rel_error, entry.max_rel_error);
        it->second.elements_checked += entry.elements_checked;
        if (entry.status == GradcheckStatus::kFail) it->second.status = GradcheckStatus::kFail;
      }
    }
  }
  for (auto& [li, e] : merged) report.entries.push_back(e);
  return report;
}

std::vector<std::function<Network<double>(std::uint64_t)>> reference_gradcheck_models() {
  std::vector<std::function<Network<double>(std::uint64_t)>> models;

  // Trainable frequency analysis with grouped feature convolutions.
  models.emplace_back([](std::uint64_t seed) {
    Network<double> net(Shape{1, 2, 24});
    net.add(time_conv(4, 7))
        .add(max_pool(2))
        .add(ear_conv2d(4, 3, Activation::kRelu, 2))
        .add(conv1d(4, 3, Activation::kLinear, 2))
        .add(max_pool(2))
        .add(flatten_concat())
        .add(dense(8, Activation::kSigmoid))
        .add(dropout(0.5))
        .add(dense(5, Activation::kLinear))
        .add(softmax());
    net.initialise(seed);
    return net;
  });

  // Frozen frequency analysis followed by peak normalisation.
  models.emplace_back([](std::uint64_t seed) {
    Network<double> net(Shape{1, 2, 16});
    net.add(time_conv(3, 5, Activation::kLinear, /*trainable=*/false, /*bias=*/false))
        .add(peak_normalise())
        .add(max_pool(2))
        .add(ear_conv2d(6, 3, Activation::kRelu, 3))
        .add(flatten_concat())
        .add(dense(6, Activation::kRelu))
        .add(dense(4, Activation::kLinear))
        .add(softmax());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.5);
    for (double& w : net.layer(0).params()[0].value.data) w = normal(rng);
    net.initialise(seed);
    return net;
  });

  // Dense-only head.
  models.emplace_back([](std::uint64_t seed) {
    Network<double> net(Shape{1, 1, 7});
    net.add(dense(9, Activation::kSigmoid))
        .add(dropout(0.25))
        .add(dense(6, Activation::kRelu))
        .add(dense(3, Activation::kLinear))
        .add(softmax());
    net.initialise(seed);
    return net;
  });
  return models;
}

}  // namespace waveloc::nn
