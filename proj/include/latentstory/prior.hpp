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

// Autoregressive prior over latent code sequences given the prompt.
// Latent vocabulary: codes 0..K-1, then bos = K, eos = K + 1, pad = K + 2.

#include "latentstory/autograd.hpp"
#include "latentstory/config.hpp"
#include "latentstory/corpus.hpp"
#include "latentstory/errors.hpp"
#include "latentstory/generator.hpp"
#include "latentstory/nn.hpp"
#include "latentstory/sampling.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace latentstory {

struct CodeSampling {
  double p = 0.9;
  double temperature = 1.0;
  int min_len = 1;
  int max_len = 64;
};

template <typename Scalar>
class Prior {
 public:
  ModelConfig config;

  Parameter<Scalar> token_embedding;
  Parameter<Scalar> positions;
  Encoder<Scalar> encoder;
  Parameter<Scalar> code_embedding;  // (K + 3) x d
  Parameter<Scalar> code_positions;  // (max_codes + 1) x d
  Decoder<Scalar> decoder;
  Linear<Scalar> output;

  explicit Prior(const ModelConfig& cfg) : config(cfg) {
    validate(cfg);
    std::mt19937_64 rng(cfg.init_seed ^ 0x9e3779b97f4a7c15ULL);
    const Eigen::Index d = cfg.d_model;
    token_embedding = Parameter<Scalar>("prior.token_embedding", normal_init<Scalar>(cfg.vocab_size, d, 1.0 / std::sqrt(double(d)), rng));
    positions = Parameter<Scalar>("prior.positions", normal_init<Scalar>(cfg.max_positions, d, 0.02, rng));
    encoder = Encoder<Scalar>("prior.encoder", cfg.encoder_layers, d, cfg.heads, cfg.ffn_dim, rng);
    code_embedding = Parameter<Scalar>("prior.code_embedding", normal_init<Scalar>(cfg.prior_vocab(), d, 1.0 / std::sqrt(double(d)), rng));
    code_positions = Parameter<Scalar>("prior.code_positions", normal_init<Scalar>(cfg.prior_max_codes + 1, d, 0.02, rng));
    decoder = Decoder<Scalar>("prior.decoder", cfg.prior_layers, d, cfg.heads, cfg.ffn_dim, rng);
    output = Linear<Scalar>("prior.output", d, cfg.prior_vocab(), rng);
  }

  Prior(const Prior&) = delete;
  Prior& operator=(const Prior&) = delete;

  /// Copies the prompt encoder (and its embeddings) of a stage-1 model.
  void init_encoder_from(Generator<Scalar>& gen) {
    if (gen.config.d_model != config.d_model || gen.config.encoder_layers != config.encoder_layers ||
        gen.config.vocab_size != config.vocab_size) {
      throw CheckpointError("prior: encoder shape does not match the stage-1 model");
    }
    token_embedding.value = gen.token_embedding.value;
    positions.value = gen.positions.value;
    ParameterList<Scalar> src;
    ParameterList<Scalar> dst;
    gen.prompt_encoder.collect(src);
    encoder.collect(dst);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
  }

  ParameterList<Scalar> parameters() {
    ParameterList<Scalar> out{&token_embedding, &positions};
    encoder.collect(out);
    out.push_back(&code_embedding);
    out.push_back(&code_positions);
    decoder.collect(out);
    output.collect(out);
    return out;
  }

  Var<Scalar> encode(Graph<Scalar>& g, const std::vector<int>& prompt_ids, const ForwardContext& ctx) {
    if (static_cast<int>(prompt_ids.size()) > config.max_src_len) {
      throw DataError("prompt of length " + std::to_string(prompt_ids.size()) + " exceeds max_src_len " + std::to_string(config.max_src_len));
    }
    std::vector<int> ids{Vocab::kBos};
    ids.insert(ids.end(), prompt_ids.begin(), prompt_ids.end());
    Var<Scalar> x = gather_rows(g.parameter(token_embedding), ids) +
                    slice_rows(g.parameter(positions), 0, static_cast<Eigen::Index>(ids.size()));
    return encoder(g, dropout(x, ctx), nullptr, ctx);
  }

  /// Next-code logits for each input position: n x (K + 3).
  Var<Scalar> logits(Graph<Scalar>& g, const Var<Scalar>& memory, const std::vector<int>& inputs, const ForwardContext& ctx) {
    if (static_cast<int>(inputs.size()) > config.prior_max_codes + 1) {
      throw DataError("prior: input of length " + std::to_string(inputs.size()) + " exceeds max codes");
    }
    Var<Scalar> x = gather_rows(g.parameter(code_embedding), inputs) +
                    slice_rows(g.parameter(code_positions), 0, static_cast<Eigen::Index>(inputs.size()));
    return output(g, decoder(g, dropout(x, ctx), memory, ctx));
  }

  /// Mean next-code cross-entropy; targets end with eos.
  Var<Scalar> prior_loss(Graph<Scalar>& g, const std::vector<int>& prompt_ids, const std::vector<int>& targets,
                         const ForwardContext& ctx) {
    check_targets(targets);
    std::vector<int> inputs{config.prior_bos()};
    inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
    Var<Scalar> memory = encode(g, prompt_ids, ctx);
    return cross_entropy(logits(g, memory, inputs, ctx), targets, std::vector<Scalar>(targets.size(), Scalar(1)));
  }

  /// Fraction of teacher-forced positions whose argmax equals the target.
  std::pair<int, int> teacher_forced_hits(const std::vector<int>& prompt_ids, const std::vector<int>& targets) {
    check_targets(targets);
    Graph<Scalar> g(false);
    std::vector<int> inputs{config.prior_bos()};
    inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
    Var<Scalar> memory = encode(g, prompt_ids, ForwardContext{});
    const auto predicted = argmax_rows(logits(g, memory, inputs, ForwardContext{}).value());
    int hits = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) hits += predicted[i] == targets[i] ? 1 : 0;
    return {hits, static_cast<int>(targets.size())};
  }

  /// Samples codes (without the trailing eos). eos is masked before min_len
  /// and sampling stops at max_len; bos and pad are never sampled.
  std::vector<int> sample_codes(const std::vector<int>& prompt_ids, const CodeSampling& opts, std::mt19937_64& rng) {
    if (!(opts.p > 0.0 && opts.p <= 1.0)) throw ConfigError("p: nucleus mass must lie in (0, 1]");
    const int max_len = std::min(opts.max_len, config.prior_max_codes);
    const int min_len = std::min(opts.min_len, max_len);
    Graph<Scalar> enc_graph(false);
    Var<Scalar> memory = encode(enc_graph, prompt_ids, ForwardContext{});
    std::vector<int> inputs{config.prior_bos()};
    std::vector<int> codes;
    while (static_cast<int>(codes.size()) < max_len) {
      Graph<Scalar> g(false);
      Var<Scalar> mem = g.constant(memory.value());
      const auto all = logits(g, mem, inputs, ForwardContext{});
      std::vector<double> row(static_cast<std::size_t>(all.cols()));
      for (Eigen::Index k = 0; k < all.cols(); ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(all.value()(all.rows() - 1, k));
      const double ninf = -std::numeric_limits<double>::infinity();
      row[static_cast<std::size_t>(config.prior_bos())] = ninf;
      row[static_cast<std::size_t>(config.prior_pad())] = ninf;
      if (static_cast<int>(codes.size()) < min_len) row[static_cast<std::size_t>(config.prior_eos())] = ninf;
      const int next = sample_next(row, opts.temperature, opts.p, rng);
      if (next == config.prior_eos()) break;
      codes.push_back(next);
      inputs.push_back(next);
    }
    return codes;
  }

 private:
  void check_targets(const std::vector<int>& targets) const {
    if (targets.empty() || targets.back() != config.prior_eos()) throw DataError("prior targets must end with eos");
    if (static_cast<int>(targets.size()) - 1 > config.prior_max_codes) {
      throw DataError("prior target of " + std::to_string(targets.size() - 1) + " codes exceeds the maximum of " +
                      std::to_string(config.prior_max_codes));
    }
  }
};

/// Posterior argmax codes of a story plus eos; codes whose block lies
/// entirely in padding are dropped.
template <typename Scalar>
std::vector<int> make_targets(Generator<Scalar>& gen, const PromptStoryPair& ex) {
  Graph<Scalar> g(false);
  Var<Scalar> logits = gen.posterior_logits(g, ex.story_ids, ex.story_mask, ForwardContext{});
  std::vector<int> codes = argmax_rows(logits.value());
  const int block = gen.block();
  const int keep = std::max(1, (ex.story_length() + block - 1) / block);
  if (static_cast<int>(codes.size()) > keep) codes.resize(static_cast<std::size_t>(keep));
  codes.push_back(gen.config.prior_eos());
  return codes;
}

}  // namespace latentstory
