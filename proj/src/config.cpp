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

#include "latentstory/config.hpp"

#include "latentstory/errors.hpp"

namespace latentstory {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

Stage TrainConfig::parsed_stage() const {
  if (stage == "warmstart") return Stage::WarmStart;
  if (stage == "finetune") return Stage::FineTune;
  if (stage == "prior") return Stage::Prior;
  throw ConfigError("stage: expected warmstart, finetune or prior, got '" + stage + "'");
}

void validate(const ModelConfig& cfg) {
  require(cfg.vocab_size >= 4, "vocab_size: must include the four special tokens");
  require(cfg.d_model > 0, "d_model: must be positive");
  require(cfg.heads > 0 && cfg.d_model % cfg.heads == 0, "heads: d_model must be divisible by heads");
  require(cfg.ffn_dim > 0, "ffn_dim: must be positive");
  require(cfg.encoder_layers >= 0 && cfg.decoder_layers >= 0 && cfg.prior_layers >= 0, "layers: must be >= 0");
  require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "dropout: must lie in [0, 1)");
  require(cfg.max_positions > 0 && cfg.max_positions <= 512, "max_positions: must lie in (0, 512]");
  require(cfg.codes >= 2, "codes: need at least two latent codes");
  require(cfg.cnn_layers >= 0 && cfg.cnn_layers <= 8, "cnn_layers: must lie in [0, 8]");
  require(cfg.max_src_len > 0 && cfg.max_src_len < cfg.max_positions, "max_src_len: must be positive and below max_positions");
  require(cfg.max_story_len > 0 && cfg.max_story_len <= cfg.max_positions, "max_story_len: must not exceed max_positions");
  require(cfg.max_story_len % cfg.block() == 0, "max_story_len: must be a multiple of 2^cnn_layers");
  require(cfg.prior_max_codes > 0 && cfg.prior_max_codes <= 512, "prior_max_codes: must lie in (0, 512]");
}

void validate(const TrainConfig& cfg) {
  (void)cfg.parsed_stage();
  require(cfg.lambda1 >= 0.0, "lambda1: must be >= 0");
  require(cfg.lambda2 >= 0.0, "lambda2: must be >= 0");
  require(cfg.lr >= 0.0, "lr: must be >= 0");
  require(cfg.steps >= 0, "steps: must be >= 0");
  require(cfg.batch_size > 0, "batch_size: must be positive");
  require(cfg.grad_accum > 0, "grad_accum: must be positive");
  require(cfg.max_grad_norm > 0.0, "max_grad_norm: must be positive");
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0, "beta1/beta2: must lie in [0, 1)");
  require(cfg.eps > 0.0, "eps: must be positive");
  require(cfg.tau_min > 0.0 && cfg.tau_max >= cfg.tau_min, "tau_min/tau_max: need 0 < tau_min <= tau_max");
  require(cfg.tau_decay >= 0.0, "tau_decay: must be >= 0");
  require(cfg.tau_horizon > 0.0, "tau_horizon: must be positive");
  require(cfg.log_every > 0, "log_every: must be positive");
  require(cfg.checkpoint_every >= 0, "checkpoint_every: must be >= 0");
}

void validate(const SamplingConfig& cfg) {
  require(cfg.p > 0.0 && cfg.p <= 1.0, "p: must lie in (0, 1]");
  require(cfg.temperature >= 0.0, "temperature: must be >= 0 (0 means greedy)");
  require(cfg.min_tokens >= 0, "min_tokens: must be >= 0");
  require(cfg.max_tokens > 0 && cfg.max_tokens <= 512, "max_tokens: must lie in (0, 512]");
  require(cfg.min_tokens <= cfg.max_tokens, "min_tokens: must not exceed max_tokens");
  require(cfg.min_codes >= 0, "min_codes: must be >= 0");
}

}  // namespace latentstory
