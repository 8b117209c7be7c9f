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

// Pre-norm Transformer blocks built on the autograd graph.

#include "latentstory/autograd.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace latentstory {

/// Per-forward settings: training mode turns dropout on.
struct ForwardContext {
  bool train = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
};

template <typename Scalar>
Matrix<Scalar> normal_init(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
  return m;
}

template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, const ForwardContext& ctx) {
  if (!ctx.train || ctx.dropout <= 0.0 || ctx.rng == nullptr) return x;
  std::bernoulli_distribution keep(1.0 - ctx.dropout);
  const Scalar s = static_cast<Scalar>(1.0 / (1.0 - ctx.dropout));
  Matrix<Scalar> mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*ctx.rng) ? s : Scalar(0);
  return mul_constant(x, std::move(mask));
}

/// Additive causal mask: 0 on and below the diagonal, -inf above.
template <typename Scalar>
Matrix<Scalar> causal_mask(Eigen::Index n) {
  Matrix<Scalar> m = Matrix<Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = -std::numeric_limits<Scalar>::infinity();
  }
  return m;
}

/// Additive key mask: -inf in every column whose key is padding.
template <typename Scalar>
Matrix<Scalar> key_padding_mask(Eigen::Index queries, const std::vector<bool>& is_pad) {
  Matrix<Scalar> m = Matrix<Scalar>::Zero(queries, static_cast<Eigen::Index>(is_pad.size()));
  for (std::size_t j = 0; j < is_pad.size(); ++j) {
    if (is_pad[j]) m.col(static_cast<Eigen::Index>(j)).setConstant(-std::numeric_limits<Scalar>::infinity());
  }
  return m;
}

template <typename Scalar>
struct Linear {
  Parameter<Scalar> weight;  // in x out
  Parameter<Scalar> bias;    // 1 x out

  Linear() = default;
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng)
      : weight(name + ".weight", normal_init<Scalar>(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
        bias(name + ".bias", Matrix<Scalar>::Zero(1, out)) {}

  Var<Scalar> operator()(Graph<Scalar>& g, const Var<Scalar>& x) {
    return add_row(matmul(x, g.parameter(weight)), g.parameter(bias));
  }

  void collect(ParameterList<Scalar>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

template <typename Scalar>
struct LayerNorm {
  Parameter<Scalar> gain;
  Parameter<Scalar> shift;

  LayerNorm() = default;
  LayerNorm(const std::string& name, Eigen::Index d)
      : gain(name + ".gain", Matrix<Scalar>::Ones(1, d)), shift(name + ".shift", Matrix<Scalar>::Zero(1, d)) {}

  Var<Scalar> operator()(Graph<Scalar>& g, const Var<Scalar>& x) {
    return layer_norm(x, g.parameter(gain), g.parameter(shift));
  }

  void collect(ParameterList<Scalar>& out) {
    out.push_back(&gain);
    out.push_back(&shift);
  }
};

template <typename Scalar>
struct MultiHeadAttention {
  Linear<Scalar> query, key, value, output;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, Eigen::Index d, int n_heads, std::mt19937_64& rng)
      : query(name + ".q", d, d, rng),
        key(name + ".k", d, d, rng),
        value(name + ".v", d, d, rng),
        output(name + ".o", d, d, rng),
        heads(n_heads) {}

  /// mask, when given, is added to the (queries x keys) scores of every head.
  Var<Scalar> operator()(Graph<Scalar>& g, const Var<Scalar>& x, const Var<Scalar>& memory,
                         const Matrix<Scalar>* mask, const ForwardContext& ctx) {
    const Eigen::Index d = x.cols();
    const Eigen::Index dh = d / heads;
    const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    Var<Scalar> q = query(g, x);
    Var<Scalar> k = key(g, memory);
    Var<Scalar> v = value(g, memory);
    std::vector<Var<Scalar>> parts;
    parts.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Var<Scalar> scores = scale(matmul_nt(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh)), inv_sqrt);
      if (mask != nullptr) scores = add_constant(scores, *mask);
      Var<Scalar> weights = dropout(softmax_rows(scores), ctx);
      parts.push_back(matmul(weights, slice_cols(v, h * dh, dh)));
    }
    Var<Scalar> merged = heads == 1 ? parts.front() : concat_cols(parts);
    return output(g, merged);
  }

  void collect(ParameterList<Scalar>& out) {
    query.collect(out);
    key.collect(out);
    value.collect(out);
    output.collect(out);
  }
};

template <typename Scalar>
struct FeedForward {
  Linear<Scalar> expand, contract;

  FeedForward() = default;
  FeedForward(const std::string& name, Eigen::Index d, Eigen::Index hidden, std::mt19937_64& rng)
      : expand(name + ".expand", d, hidden, rng), contract(name + ".contract", hidden, d, rng) {}

  Var<Scalar> operator()(Graph<Scalar>& g, const Var<Scalar>& x, const ForwardContext& ctx) {
    return contract(g, dropout(gelu(expand(g, x)), ctx));
  }

  void collect(ParameterList<Scalar>& out) {
    expand.collect(out);
    contract.collect(out);
  }
};

template <typename Scalar>
struct EncoderLayer {
  LayerNorm<Scalar> norm_attn, norm_ffn;
  MultiHeadAttention<Scalar> attn;
  FeedForward<Scalar> ffn;

  EncoderLayer() = default;
  EncoderLayer(const std::string& name, Eigen::Index d, int heads, Eigen::Index hidden, std::mt19937_64& rng)
      : norm_attn(name + ".norm_attn", d),
        norm_ffn(name + ".norm_ffn", d),
        attn(name + ".attn", d, heads, rng),
        ffn(name + ".ffn", d, hidden, rng) {}

  Var<Scalar> operator()(Graph<Scalar>& g, Var<Scalar> x, const Matrix<Scalar>* mask, const ForwardContext& ctx) {
    Var<Scalar> h = norm_attn(g, x);
    x = x + dropout(attn(g, h, h, mask, ctx), ctx);
    x = x + dropout(ffn(g, norm_ffn(g, x), ctx), ctx);
    return x;
  }

  void collect(ParameterList<Scalar>& out) {
    norm_attn.collect(out);
    norm_ffn.collect(out);
    attn.collect(out);
    ffn.collect(out);
  }
};

template <typename Scalar>
struct DecoderLayer {
  LayerNorm<Scalar> norm_self, norm_cross, norm_ffn;
  MultiHeadAttention<Scalar> self_attn, cross_attn;
  FeedForward<Scalar> ffn;

  DecoderLayer() = default;
  DecoderLayer(const std::string& name, Eigen::Index d, int heads, Eigen::Index hidden, std::mt19937_64& rng)
      : norm_self(name + ".norm_self", d),
        norm_cross(name + ".norm_cross", d),
        norm_ffn(name + ".norm_ffn", d),
        self_attn(name + ".self_attn", d, heads, rng),
        cross_attn(name + ".cross_attn", d, heads, rng),
        ffn(name + ".ffn", d, hidden, rng) {}

  Var<Scalar> operator()(Graph<Scalar>& g, Var<Scalar> x, const Var<Scalar>& memory, const Matrix<Scalar>& causal,
                         const ForwardContext& ctx) {
    Var<Scalar> h = norm_self(g, x);
    x = x + dropout(self_attn(g, h, h, &causal, ctx), ctx);
    x = x + dropout(cross_attn(g, norm_cross(g, x), memory, nullptr, ctx), ctx);
    x = x + dropout(ffn(g, norm_ffn(g, x), ctx), ctx);
    return x;
  }

  void collect(ParameterList<Scalar>& out) {
    norm_self.collect(out);
    norm_cross.collect(out);
    norm_ffn.collect(out);
    self_attn.collect(out);
    cross_attn.collect(out);
    ffn.collect(out);
  }
};

/// Stack of encoder layers plus a final LayerNorm.
template <typename Scalar>
struct Encoder {
  std::vector<EncoderLayer<Scalar>> layers;
  LayerNorm<Scalar> final_norm;

  Encoder() = default;
  Encoder(const std::string& name, int n_layers, Eigen::Index d, int heads, Eigen::Index hidden, std::mt19937_64& rng)
      : final_norm(name + ".final_norm", d) {
    layers.reserve(static_cast<std::size_t>(n_layers));
    for (int i = 0; i < n_layers; ++i) {
      layers.emplace_back(name + ".layer" + std::to_string(i), d, heads, hidden, rng);
    }
  }

  Var<Scalar> operator()(Graph<Scalar>& g, Var<Scalar> x, const Matrix<Scalar>* mask, const ForwardContext& ctx) {
    for (auto& layer : layers) x = layer(g, x, mask, ctx);
    return final_norm(g, x);
  }

  void collect(ParameterList<Scalar>& out) {
    for (auto& layer : layers) layer.collect(out);
    final_norm.collect(out);
  }
};

template <typename Scalar>
struct Decoder {
  std::vector<DecoderLayer<Scalar>> layers;
  LayerNorm<Scalar> final_norm;

  Decoder() = default;
  Decoder(const std::string& name, int n_layers, Eigen::Index d, int heads, Eigen::Index hidden, std::mt19937_64& rng)
      : final_norm(name + ".final_norm", d) {
    layers.reserve(static_cast<std::size_t>(n_layers));
    for (int i = 0; i < n_layers; ++i) {
      layers.emplace_back(name + ".layer" + std::to_string(i), d, heads, hidden, rng);
    }
  }

  Var<Scalar> operator()(Graph<Scalar>& g, Var<Scalar> x, const Var<Scalar>& memory, const ForwardContext& ctx) {
    const Matrix<Scalar> causal = causal_mask<Scalar>(x.rows());
    for (auto& layer : layers) x = layer(g, x, memory, causal, ctx);
    return final_norm(g, x);
  }

  void collect(ParameterList<Scalar>& out) {
    for (auto& layer : layers) layer.collect(out);
    final_norm.collect(out);
  }
};

}  // namespace latentstory
