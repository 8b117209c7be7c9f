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

// Hyperparameters for every stage, serialized as JSON inside checkpoints
// and accepted from --config files.

#include <json.hpp>

#include <cstdint>
#include <string>

namespace latentstory {

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 128;
  int heads = 4;
  int ffn_dim = 512;
  int encoder_layers = 4;
  int decoder_layers = 4;
  double dropout = 0.1;
  int max_positions = 512;
  int codes = 256;      // K
  int cnn_layers = 3;   // c; the latent sequence is 2^c times shorter
  int max_src_len = 16;
  int max_story_len = 512;
  int prior_layers = 4;
  int prior_max_codes = 64;
  std::uint64_t init_seed = 0;

  int block() const { return 1 << cnn_layers; }
  /// Prior vocabulary: K codes followed by bos, eos, pad.
  int prior_vocab() const { return codes + 3; }
  int prior_bos() const { return codes; }
  int prior_eos() const { return codes + 1; }
  int prior_pad() const { return codes + 2; }

  bool operator==(const ModelConfig&) const = default;
};

enum class Stage { WarmStart, FineTune, Prior };

struct TrainConfig {
  std::string stage = "finetune";
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double lr = 1e-4;
  bool lr_decay = true;  // warm-start runs at a fixed rate
  int steps = 5000;
  int batch_size = 8;
  int grad_accum = 2;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double tau_max = 0.9;
  double tau_min = 0.1;
  double tau_decay = 1e-4;
  double tau_horizon = 20000;  // step count over which the full-scale decay curve is stretched
  int log_every = 10;
  int checkpoint_every = 0;
  bool overfit_one_batch = false;

  Stage parsed_stage() const;
};

struct SamplingConfig {
  double p = 0.9;
  double temperature = 1.0;
  int min_tokens = 100;
  int max_tokens = 512;
  int min_codes = 0;  // 0: derived from min_tokens and the code block size
  std::uint64_t seed = 0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, vocab_size, d_model, heads, ffn_dim, encoder_layers,
                                                decoder_layers, dropout, max_positions, codes, cnn_layers, max_src_len,
                                                max_story_len, prior_layers, prior_max_codes, init_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, stage, lambda1, lambda2, lr, lr_decay, steps, batch_size,
                                                grad_accum, max_grad_norm, seed, beta1, beta2, eps, weight_decay,
                                                tau_max, tau_min, tau_decay, tau_horizon, log_every, checkpoint_every,
                                                overfit_one_batch)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SamplingConfig, p, temperature, min_tokens, max_tokens, min_codes,
                                                seed)

/// Throws ConfigError naming the first offending field.
void validate(const ModelConfig& cfg);
void validate(const TrainConfig& cfg);
void validate(const SamplingConfig& cfg);

}  // namespace latentstory
