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

// Posterior encoder, prompt encoder and code-guided decoder.
//
// The decoder input at step m is h^z_m + e_m + p_m: the upsampled latent
// embedding, the embedding of the previous target token (bos at m = 0) and
// a learned absolute position. Reconstruction targets are the story tokens;
// the first pad position is supervised as eos so decoding can stop.

#include "latentstory/autograd.hpp"
#include "latentstory/config.hpp"
#include "latentstory/corpus.hpp"
#include "latentstory/discourse.hpp"
#include "latentstory/errors.hpp"
#include "latentstory/latent_codec.hpp"
#include "latentstory/nn.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace latentstory {

struct LossWeights {
  double lambda1 = 0.1;  // entropy bonus
  double lambda2 = 0.1;  // discourse head
};

struct ReconstructionTargets {
  std::vector<int> inputs;    // bos, y_0 .. y_{M-2}
  std::vector<int> targets;   // y_0 .. y_{M-1}, first pad replaced by eos
  std::vector<double> weights;  // 1 on supervised positions
};

/// Builds teacher-forcing inputs/targets for a padded story.
inline ReconstructionTargets reconstruction_targets(const std::vector<int>& story_ids, const std::vector<bool>& is_pad) {
  ReconstructionTargets t;
  const std::size_t m = story_ids.size();
  t.inputs.reserve(m);
  t.inputs.push_back(Vocab::kBos);
  for (std::size_t i = 0; i + 1 < m; ++i) t.inputs.push_back(story_ids[i]);
  t.targets = story_ids;
  t.weights.assign(m, 0.0);
  bool eos_placed = false;
  for (std::size_t i = 0; i < m; ++i) {
    if (!is_pad[i]) {
      t.weights[i] = 1.0;
    } else if (!eos_placed) {
      t.targets[i] = Vocab::kEos;
      t.weights[i] = 1.0;
      eos_placed = true;
      if (i > 0) t.inputs[i] = story_ids[i - 1];
    } else if (i > 0) {
      t.inputs[i] = Vocab::kPad;
    }
  }
  return t;
}

template <typename Scalar>
struct Stage1Terms {
  Var<Scalar> total;
  Var<Scalar> recon;
  Var<Scalar> entropy;
  std::optional<Var<Scalar>> disc;
  Var<Scalar> disc_logits;  // valid only when disc is set
  std::vector<int> codes;
};

template <typename Scalar>
class Generator {
 public:
  ModelConfig config;

  Parameter<Scalar> token_embedding;  // V x d, shared by all encoders and the output layer
  Parameter<Scalar> positions;        // max_positions x d
  Parameter<Scalar> output_bias;      // 1 x V
  Encoder<Scalar> posterior_encoder;
  Encoder<Scalar> prompt_encoder;
  Decoder<Scalar> decoder;
  CnnStack<Scalar> cnn;
  CodeBook<Scalar> codebook;
  Parameter<Scalar> disc_weight;  // d x (R*d) bi-affine tensor
  Parameter<Scalar> disc_bias;    // 1 x R

  explicit Generator(const ModelConfig& cfg) : config(cfg) {
    validate(cfg);
    std::mt19937_64 rng(cfg.init_seed);
    const Eigen::Index d = cfg.d_model;
    const Eigen::Index labels = static_cast<Eigen::Index>(relation_labels().size());
    token_embedding = Parameter<Scalar>("token_embedding", normal_init<Scalar>(cfg.vocab_size, d, 1.0 / std::sqrt(double(d)), rng));
    positions = Parameter<Scalar>("positions", normal_init<Scalar>(cfg.max_positions, d, 0.02, rng));
    output_bias = Parameter<Scalar>("output_bias", Matrix<Scalar>::Zero(1, cfg.vocab_size));
    posterior_encoder = Encoder<Scalar>("posterior", cfg.encoder_layers, d, cfg.heads, cfg.ffn_dim, rng);
    prompt_encoder = Encoder<Scalar>("prompt", cfg.encoder_layers, d, cfg.heads, cfg.ffn_dim, rng);
    decoder = Decoder<Scalar>("decoder", cfg.decoder_layers, d, cfg.heads, cfg.ffn_dim, rng);
    cnn = CnnStack<Scalar>(cfg.cnn_layers, d, rng);
    codebook = CodeBook<Scalar>(d, cfg.codes, rng);
    disc_weight = Parameter<Scalar>("discourse.weight", normal_init<Scalar>(d, labels * d, 1.0 / double(d), rng));
    disc_bias = Parameter<Scalar>("discourse.bias", Matrix<Scalar>::Zero(1, labels));
  }

  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  ParameterList<Scalar> parameters() {
    ParameterList<Scalar> out{&token_embedding, &positions, &output_bias};
    posterior_encoder.collect(out);
    prompt_encoder.collect(out);
    decoder.collect(out);
    cnn.collect(out);
    codebook.collect(out);
    out.push_back(&disc_weight);
    out.push_back(&disc_bias);
    return out;
  }

  int block() const { return config.block(); }

  /// Token plus position embeddings for ids placed at positions [0, n).
  Var<Scalar> embed(Graph<Scalar>& g, const std::vector<int>& ids) {
    if (static_cast<int>(ids.size()) > config.max_positions) {
      throw DataError("sequence of length " + std::to_string(ids.size()) + " exceeds " + std::to_string(config.max_positions) + " positions");
    }
    Var<Scalar> tok = gather_rows(g.parameter(token_embedding), ids);
    Var<Scalar> pos = slice_rows(g.parameter(positions), 0, static_cast<Eigen::Index>(ids.size()));
    return tok + pos;
  }

  /// Bidirectional encoding of the story; pads are masked as keys.
  Var<Scalar> encode_posterior(Graph<Scalar>& g, const std::vector<int>& story_ids, const std::vector<bool>& is_pad,
                               const ForwardContext& ctx) {
    Var<Scalar> x = dropout(embed(g, story_ids), ctx);
    std::vector<bool> mask_pad = is_pad;
    if (std::all_of(mask_pad.begin(), mask_pad.end(), [](bool p) { return p; })) mask_pad.assign(mask_pad.size(), false);
    const Matrix<Scalar> mask = key_padding_mask<Scalar>(x.rows(), mask_pad);
    return posterior_encoder(g, x, &mask, ctx);
  }

  /// Encodes bos + prompt; the bos slot keeps cross-attention defined for empty prompts.
  Var<Scalar> encode_prompt(Graph<Scalar>& g, const std::vector<int>& prompt_ids, const ForwardContext& ctx) {
    if (static_cast<int>(prompt_ids.size()) > config.max_src_len) {
      throw DataError("prompt of length " + std::to_string(prompt_ids.size()) + " exceeds max_src_len " + std::to_string(config.max_src_len));
    }
    std::vector<int> ids{Vocab::kBos};
    ids.insert(ids.end(), prompt_ids.begin(), prompt_ids.end());
    Var<Scalar> x = dropout(embed(g, ids), ctx);
    return prompt_encoder(g, x, nullptr, ctx);
  }

  /// Code logits t for every compressed position: (M / 2^c) x K.
  Var<Scalar> posterior_logits(Graph<Scalar>& g, const std::vector<int>& story_ids, const std::vector<bool>& is_pad,
                               const ForwardContext& ctx) {
    Var<Scalar> encoded = cnn.downsample(g, encode_posterior(g, story_ids, is_pad, ctx));
    return matmul(encoded, g.parameter(codebook.projection));
  }

  /// Per-step vocabulary logits with latent guidance added to the decoder input.
  Var<Scalar> decode_with_codes(Graph<Scalar>& g, const Var<Scalar>& guidance, const std::vector<int>& inputs,
                                const Var<Scalar>& memory, const ForwardContext& ctx) {
    if (guidance.rows() != static_cast<Eigen::Index>(inputs.size())) {
      throw DataError("decode_with_codes: guidance length " + std::to_string(guidance.rows()) + " != target length " +
                      std::to_string(inputs.size()));
    }
    return decode_from(g, embed(g, inputs) + guidance, memory, ctx);
  }

  /// Decoder without latent guidance.
  Var<Scalar> decode_plain(Graph<Scalar>& g, const std::vector<int>& inputs, const Var<Scalar>& memory,
                           const ForwardContext& ctx) {
    return decode_from(g, embed(g, inputs), memory, ctx);
  }

  Var<Scalar> reconstruction_loss(const Var<Scalar>& logits, const ReconstructionTargets& t) {
    std::vector<Scalar> w(t.weights.begin(), t.weights.end());
    return cross_entropy(logits, t.targets, w);
  }

  /// Bi-affine relation logits for every adjacent EDU pair, (S - 1) x R.
  Var<Scalar> discourse_logits(Graph<Scalar>& g, const Var<Scalar>& guidance, const DiscourseAnnotation& ann) {
    std::vector<std::pair<int, int>> spans;
    for (const auto& e : ann.edus) spans.emplace_back(e.start, e.end);
    Var<Scalar> pooled = pool_spans(guidance, spans);
    const Eigen::Index pairs = pooled.rows() - 1;
    return biaffine(slice_rows(pooled, 0, pairs), slice_rows(pooled, 1, pairs), g.parameter(disc_weight),
                    g.parameter(disc_bias));
  }

  /// Mean cross-entropy of the adjacent-pair labels; nullopt for fewer than two EDUs.
  std::optional<Var<Scalar>> discourse_loss(Graph<Scalar>& g, const Var<Scalar>& guidance, const DiscourseAnnotation& ann,
                                            Var<Scalar>* logits_out = nullptr) {
    if (ann.edus.size() < 2) return std::nullopt;
    Var<Scalar> logits = discourse_logits(g, guidance, ann);
    if (logits_out != nullptr) *logits_out = logits;
    std::vector<int> targets;
    for (const auto& l : ann.labels) targets.push_back(relation_label_id(l));
    return cross_entropy(logits, targets, std::vector<Scalar>(targets.size(), Scalar(1)));
  }

  /// Upsampled latent guidance H^z for given code embeddings.
  Var<Scalar> guidance(Graph<Scalar>& g, const Var<Scalar>& code_embeddings) { return cnn.upsample(g, code_embeddings); }

  /// L_recon - lambda1 * L_entr + lambda2 * L_disc for one example.
  /// noise may be null (zero noise); prompts are ignored when empty_prompt.
  Stage1Terms<Scalar> stage1_loss(Graph<Scalar>& g, const PromptStoryPair& ex, Scalar tau, const Matrix<Scalar>* noise,
                                  const LossWeights& w, const ForwardContext& ctx, bool empty_prompt = false) {
    Stage1Terms<Scalar> out;
    Var<Scalar> logits = posterior_logits(g, ex.story_ids, ex.story_mask, ctx);
    LatentCodes<Scalar> codes = quantize_logits(g, codebook, logits, tau, noise, QuantizeMode::Relaxed);
    out.codes = codes.codes;
    Var<Scalar> hz = guidance(g, codes.embeddings);
    Var<Scalar> memory = encode_prompt(g, empty_prompt ? std::vector<int>{} : ex.prompt_ids, ctx);
    const ReconstructionTargets t = reconstruction_targets(ex.story_ids, ex.story_mask);
    out.recon = reconstruction_loss(decode_with_codes(g, hz, t.inputs, memory, ctx), t);
    out.entropy = entropy_reg(logits);
    out.total = out.recon - scale(out.entropy, static_cast<Scalar>(w.lambda1));
    if (ex.annotation && w.lambda2 > 0.0) {
      Var<Scalar> disc_logits;
      out.disc = discourse_loss(g, hz, *ex.annotation, &disc_logits);
      if (out.disc) {
        out.disc_logits = disc_logits;
        out.total = out.total + scale(*out.disc, static_cast<Scalar>(w.lambda2));
      }
    }
    return out;
  }

 private:
  Var<Scalar> decode_from(Graph<Scalar>& g, const Var<Scalar>& input, const Var<Scalar>& memory, const ForwardContext& ctx) {
    Var<Scalar> h = decoder(g, dropout(input, ctx), memory, ctx);
    return add_row(matmul_nt(h, g.parameter(token_embedding)), g.parameter(output_bias));
  }
};

}  // namespace latentstory
