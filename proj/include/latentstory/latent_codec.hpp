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

// Temporal abstraction and the discrete bottleneck.
//
// downsample: c strided convolutions (kernel 4, stride 2, one zero per side)
// halve the sequence c times; upsample mirrors them with transposed
// convolutions. quantize projects every compressed position onto K code
// logits and either takes the argmax (hard) or a Gumbel-Softmax mixture of
// the code embeddings (relaxed).

#include "latentstory/autograd.hpp"
#include "latentstory/errors.hpp"
#include "latentstory/nn.hpp"
#include "latentstory/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace latentstory {

inline constexpr int kCnnKernel = 4;
inline constexpr int kCnnStride = 2;
inline constexpr int kCnnPad = 1;

/// Gumbel temperature max[tau_min, tau_max * exp(-decay * step * 20000 / horizon)].
/// With the default horizon of 20000 steps this is the plain exponential decay.
struct TauSchedule {
  double tau_max = 0.9;
  double tau_min = 0.1;
  double decay = 1e-4;
  double horizon = 20000;

  double operator()(long step) const {
    const double scaled = static_cast<double>(step) * (20000.0 / horizon);
    return std::max(tau_min, tau_max * std::exp(-decay * scaled));
  }
};

inline double tau_schedule(long step) { return TauSchedule{}(step); }

template <typename Scalar>
struct CnnStack {
  std::vector<Linear<Scalar>> down;  // (kernel*d) -> d
  std::vector<Linear<Scalar>> up;    // d -> (kernel*d), overlap-added

  CnnStack() = default;
  CnnStack(int layers, Eigen::Index d, std::mt19937_64& rng) {
    for (int i = 0; i < layers; ++i) down.emplace_back("cnn.down" + std::to_string(i), kCnnKernel * d, d, rng);
    for (int i = 0; i < layers; ++i) {
      Linear<Scalar> l("cnn.up" + std::to_string(i), d, kCnnKernel * d, rng);
      l.bias = Parameter<Scalar>(l.bias.name, Matrix<Scalar>::Zero(1, d));
      up.push_back(std::move(l));
    }
  }

  int layers() const { return static_cast<int>(down.size()); }

  /// M x d -> (M / 2^c) x d. GELU between layers, none after the last.
  Var<Scalar> downsample(Graph<Scalar>& g, Var<Scalar> x) {
    const Eigen::Index block = Eigen::Index(1) << layers();
    if (x.rows() % block != 0) {
      throw DataError("downsample: length " + std::to_string(x.rows()) + " is not divisible by " + std::to_string(block));
    }
    for (int i = 0; i < layers(); ++i) {
      x = down[i](g, unfold(x, kCnnKernel, kCnnStride, kCnnPad));
      if (i + 1 < layers()) x = gelu(x);
    }
    return x;
  }

  /// L x d -> (L * 2^c) x d.
  Var<Scalar> upsample(Graph<Scalar>& g, Var<Scalar> x) {
    for (int i = 0; i < layers(); ++i) {
      Linear<Scalar>& l = up[i];
      Var<Scalar> cols = matmul(x, g.parameter(l.weight));
      x = add_row(fold(cols, kCnnKernel, kCnnStride, kCnnPad, x.rows() * kCnnStride), g.parameter(l.bias));
      if (i + 1 < layers()) x = gelu(x);
    }
    return x;
  }

  void collect(ParameterList<Scalar>& out) {
    for (auto& l : down) l.collect(out);
    for (auto& l : up) l.collect(out);
  }
};

/// W^z (d x K) maps encoder states to code logits; row k of E^z (K x d) is
/// the embedding of code k.
template <typename Scalar>
struct CodeBook {
  Parameter<Scalar> projection;
  Parameter<Scalar> embedding;

  CodeBook() = default;
  CodeBook(Eigen::Index d, Eigen::Index codes, std::mt19937_64& rng)
      : projection("codebook.projection", normal_init<Scalar>(d, codes, 1.0 / std::sqrt(static_cast<double>(d)), rng)),
        embedding("codebook.embedding", normal_init<Scalar>(codes, d, 1.0, rng)) {}

  Eigen::Index codes() const { return projection.value.cols(); }

  void collect(ParameterList<Scalar>& out) {
    out.push_back(&projection);
    out.push_back(&embedding);
  }
};

enum class QuantizeMode { Hard, Relaxed };

template <typename Scalar>
struct LatentCodes {
  Var<Scalar> logits;        // L x K
  std::vector<int> codes;    // argmax of the logits
  Var<Scalar> weights;       // L x K relaxed weights (one-hot rows in hard mode)
  Var<Scalar> embeddings;    // L x d
};

/// Standard Gumbel noise keyed on (seed, step, stream, row, col).
template <typename Scalar>
Matrix<Scalar> gumbel_noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t step,
                            std::uint64_t stream) {
  Matrix<Scalar> g(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      g(r, c) = static_cast<Scalar>(gumbel_from_bits(hash_key(seed, step, stream, static_cast<std::uint64_t>(r),
                                                              static_cast<std::uint64_t>(c))));
    }
  }
  return g;
}

template <typename Scalar>
std::vector<int> argmax_rows(const Matrix<Scalar>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    m.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

/// Relaxed weights softmax((t + g) / tau) for fixed logits and noise.
template <typename Scalar>
Var<Scalar> gumbel_softmax(const Var<Scalar>& logits, const Matrix<Scalar>& noise, Scalar tau) {
  if (!(tau > Scalar(0))) throw ConfigError("tau: Gumbel temperature must be positive");
  return softmax_rows(scale(add_constant(logits, noise), Scalar(1) / tau));
}

/// Bottleneck over logits already computed as t = O^e W^z.
template <typename Scalar>
LatentCodes<Scalar> quantize_logits(Graph<Scalar>& g, CodeBook<Scalar>& book, const Var<Scalar>& logits, Scalar tau,
                                    const Matrix<Scalar>* noise, QuantizeMode mode) {
  if (!(tau > Scalar(0))) throw ConfigError("tau: Gumbel temperature must be positive");
  LatentCodes<Scalar> out;
  out.logits = logits;
  out.codes = argmax_rows(logits.value());
  if (mode == QuantizeMode::Hard) {
    Matrix<Scalar> onehot = Matrix<Scalar>::Zero(logits.rows(), logits.cols());
    for (std::size_t l = 0; l < out.codes.size(); ++l) onehot(static_cast<Eigen::Index>(l), out.codes[l]) = Scalar(1);
    out.weights = g.constant(std::move(onehot));
    out.embeddings = gather_rows(g.parameter(book.embedding), out.codes);
    return out;
  }
  const Matrix<Scalar> zeros = Matrix<Scalar>::Zero(logits.rows(), logits.cols());
  out.weights = gumbel_softmax(logits, noise != nullptr ? *noise : zeros, tau);
  out.embeddings = matmul(out.weights, g.parameter(book.embedding));
  return out;
}

template <typename Scalar>
LatentCodes<Scalar> quantize(Graph<Scalar>& g, CodeBook<Scalar>& book, const Var<Scalar>& encoded, Scalar tau,
                             const Matrix<Scalar>* noise, QuantizeMode mode) {
  Var<Scalar> logits = matmul(encoded, g.parameter(book.projection));
  return quantize_logits(g, book, logits, tau, noise, mode);
}

/// Entropy (nats) of the code distribution averaged over positions.
template <typename Scalar>
Var<Scalar> entropy_reg(const Var<Scalar>& logits) {
  return entropy(mean_rows(softmax_rows(logits)));
}

}  // namespace latentstory
