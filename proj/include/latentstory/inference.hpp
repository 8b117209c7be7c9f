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

// Prompt -> codes (prior) -> guidance (hard code embeddings, upsampled) ->
// tokens (nucleus sampling).

#include "latentstory/config.hpp"
#include "latentstory/corpus.hpp"
#include "latentstory/errors.hpp"
#include "latentstory/generator.hpp"
#include "latentstory/prior.hpp"
#include "latentstory/sampling.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace latentstory {

struct Generation {
  std::string story;
  std::vector<int> tokens;
  std::vector<int> codes;
};

/// Code count bounds implied by the token limits; throws when min_tokens
/// cannot be reached within the prior's code budget.
inline std::pair<int, int> code_length_bounds(const ModelConfig& model, const SamplingConfig& s) {
  const int block = model.block();
  const int max_codes = std::min(model.prior_max_codes, std::max(1, s.max_tokens / block));
  const int needed = (s.min_tokens + block - 1) / block;
  const int min_codes = std::max({1, needed, s.min_codes});
  if (min_codes > max_codes || s.min_tokens > model.max_positions) {
    throw ConfigError("min_tokens: " + std::to_string(s.min_tokens) + " tokens need " + std::to_string(min_codes) +
                      " codes but at most " + std::to_string(max_codes) + " are available");
  }
  return {min_codes, max_codes};
}

/// Decodes tokens guided by fixed codes. eos is suppressed before
/// min_tokens; pad, bos and unk are never emitted. Decoding stops at eos,
/// max_tokens or the code horizon, whichever comes first.
template <typename Scalar>
std::vector<int> decode_tokens(Generator<Scalar>& gen, const std::vector<int>& prompt_ids, const std::vector<int>& codes,
                               const SamplingConfig& s, std::mt19937_64& rng) {
  if (codes.empty()) throw DataError("decode_tokens: empty code sequence");
  const ForwardContext ctx{};
  Graph<Scalar> fixed(false);
  const Matrix<Scalar> hz =
      gen.guidance(fixed, gather_rows(fixed.parameter(gen.codebook.embedding), codes)).value();
  const Matrix<Scalar> memory = gen.encode_prompt(fixed, prompt_ids, ctx).value();
  const int horizon =
      std::min({static_cast<int>(hz.rows()), s.max_tokens, gen.config.max_positions});
  const double ninf = -std::numeric_limits<double>::infinity();

  std::vector<int> inputs{Vocab::kBos};
  std::vector<int> out;
  while (static_cast<int>(out.size()) < horizon) {
    Graph<Scalar> g(false);
    const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
    Var<Scalar> guidance = g.constant(hz.topRows(n));
    Var<Scalar> logits = gen.decode_with_codes(g, guidance, inputs, g.constant(memory), ctx);
    std::vector<double> row(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index k = 0; k < logits.cols(); ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(logits.value()(n - 1, k));
    row[Vocab::kPad] = ninf;
    row[Vocab::kBos] = ninf;
    row[Vocab::kUnk] = ninf;
    if (static_cast<int>(out.size()) < s.min_tokens) row[Vocab::kEos] = ninf;
    const int next = sample_next(row, s.temperature, s.p, rng);
    if (next == Vocab::kEos) break;
    out.push_back(next);
    inputs.push_back(next);
  }
  return out;
}

/// Full generation for one prompt; the RNG is seeded from s.seed only.
template <typename Scalar>
Generation generate_text(Generator<Scalar>& gen, Prior<Scalar>& prior, const Vocab& vocab, const std::string& prompt,
                         const SamplingConfig& s) {
  validate(s);
  const auto [min_codes, max_codes] = code_length_bounds(gen.config, s);
  std::vector<int> prompt_ids = vocab.encode(prompt);
  if (static_cast<int>(prompt_ids.size()) > gen.config.max_src_len) prompt_ids.resize(static_cast<std::size_t>(gen.config.max_src_len));
  std::mt19937_64 rng(s.seed);
  Generation out;
  out.codes = prior.sample_codes(prompt_ids, CodeSampling{s.p, s.temperature, min_codes, max_codes}, rng);
  out.tokens = decode_tokens(gen, prompt_ids, out.codes, s, rng);
  out.story = vocab.decode(out.tokens);
  return out;
}

}  // namespace latentstory
