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

#pragma once

// Top-p filtering and categorical draws shared by the prior and the decoder.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace latentstory {

/// Keeps the smallest prefix of tokens, sorted by descending probability
/// (ties by id), whose mass reaches p; zeroes the rest and renormalizes.
std::vector<double> nucleus_filter(std::span<const double> probs, double p);

/// Softmax of logits / temperature. Entries that are -inf get probability 0.
std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature);

/// Inverse-CDF draw; deterministic for a given generator state.
int sample_index(std::span<const double> probs, std::mt19937_64& rng);

int argmax_index(std::span<const double> values);

/// Temperature 0 means greedy; otherwise softmax, nucleus filter, draw.
int sample_next(std::span<const double> logits, double temperature, double p, std::mt19937_64& rng);

}  // namespace latentstory
