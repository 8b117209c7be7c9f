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

#include "latentstory/errors.hpp"
#include "latentstory/sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace latentstory;

TEST_CASE("nucleus filter worked example") {
  const std::vector<double> probs{0.5, 0.3, 0.15, 0.05};
  const auto f = nucleus_filter(probs, 0.9);
  CHECK(f[0] == doctest::Approx(0.5 / 0.95).epsilon(1e-9));
  CHECK(f[1] == doctest::Approx(0.3 / 0.95).epsilon(1e-9));
  CHECK(f[2] == doctest::Approx(0.15 / 0.95).epsilon(1e-9));
  CHECK(f[3] == 0.0);
  CHECK(f[0] == doctest::Approx(0.5263).epsilon(1e-4));
}

TEST_CASE("nucleus filter edge cases") {
  const std::vector<double> probs{0.1, 0.6, 0.3};
  CHECK(nucleus_filter(probs, 1.0) == probs);
  const std::vector<double> onehot{0.0, 1.0, 0.0};
  for (double p : {0.01, 0.5, 1.0}) CHECK(nucleus_filter(onehot, p) == onehot);
  CHECK_THROWS_AS(nucleus_filter(probs, 0.0), ConfigError);
  // ties: lower id first
  const auto t = nucleus_filter(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 0.5);
  CHECK(t == std::vector<double>{0.5, 0.5, 0.0, 0.0});
}

TEST_CASE("nucleus support is a sorted prefix and sums to one") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> probs(12);
    for (auto& v : probs) v = u(rng);
    const double s = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (auto& v : probs) v /= s;
    const double p = u(rng) * 0.99 + 0.01;
    const auto f = nucleus_filter(probs, p);
    CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    double kept_min = 1.0, dropped_max = 0.0, kept_mass = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] > 0) {
        kept_min = std::min(kept_min, probs[i]);
        kept_mass += probs[i];
      } else {
        dropped_max = std::max(dropped_max, probs[i]);
      }
    }
    CHECK(kept_min >= dropped_max);
    CHECK(kept_mass >= p - 1e-12);
  }
}

TEST_CASE("greedy sampling ignores the rng") {
  std::mt19937_64 a(1), b(2);
  const std::vector<double> logits{0.1, 2.0, -1.0};
  CHECK(sample_next(logits, 0.0, 1.0, a) == 1);
  CHECK(sample_next(logits, 0.0, 1.0, b) == 1);
}

TEST_CASE("sampling frequencies follow the distribution") {
  std::mt19937_64 rng(9);
  const std::vector<double> probs{0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_index(probs, rng))];
  for (std::size_t k = 0; k < 3; ++k) {
    const double se = std::sqrt(probs[k] * (1 - probs[k]) / n);
    CHECK(std::abs(counts[k] / double(n) - probs[k]) < 4 * se);
  }
}
