/* Copyright 2026 The latentstory Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "latentstory/sampling.hpp"

#include "latentstory/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace latentstory {

std::vector<double> nucleus_filter(std::span<const double> probs, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p: nucleus mass must lie in (0, 1]");
  if (p == 1.0) return {probs.begin(), probs.end()};  // full support, no renormalization noise
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  std::vector<double> out(probs.size(), 0.0);
  double mass = 0.0;
  for (std::size_t idx : order) {
    out[idx] = probs[idx];
    mass += probs[idx];
    if (mass >= p) break;
  }
  if (mass > 0.0) {
    for (double& v : out) v /= mass;
  }
  return out;
}

std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size(), 0.0);
  if (logits.empty()) return out;
  const double t = temperature > 0.0 ? temperature : 1.0;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::isinf(logits[i]) && logits[i] < 0 ? 0.0 : std::exp((logits[i] - m) / t);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

int sample_index(std::span<const double> probs, std::mt19937_64& rng) {
  // 53-bit uniform in [0, 1)
  const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  double total = 0.0;
  for (double v : probs) total += v;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += probs[i] / total;
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;
}

int argmax_index(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

int sample_next(std::span<const double> logits, double temperature, double p, std::mt19937_64& rng) {
  if (temperature <= 0.0) return argmax_index(logits);
  const auto probs = nucleus_filter(softmax_with_temperature(logits, temperature), p);
  return sample_index(probs, rng);
}

}  // namespace latentstory
