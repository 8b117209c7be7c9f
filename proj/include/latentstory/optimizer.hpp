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

#include "latentstory/autograd.hpp"

#include <cmath>
#include <vector>

namespace latentstory {

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename Scalar>
double clip_grad_norm(const ParameterList<Scalar>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const Scalar s = static_cast<Scalar>(max_norm / (norm + 1e-12));
    for (auto* p : params) p->grad *= s;
  }
  return norm;
}

template <typename Scalar>
double grad_norm(const ParameterList<Scalar>& params) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

/// Adam with decoupled weight decay.
template <typename Scalar>
class AdamW {
 public:
  AdamW(ParameterList<Scalar> params, double beta1, double beta2, double eps, double weight_decay)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
    for (const auto* p : params_) {
      first_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      second_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    const Scalar b1 = static_cast<Scalar>(beta1_);
    const Scalar b2 = static_cast<Scalar>(beta2_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      first_[i] = b1 * first_[i] + (Scalar(1) - b1) * p.grad;
      second_[i] = b2 * second_[i] + (Scalar(1) - b2) * p.grad.cwiseProduct(p.grad);
      if (weight_decay_ > 0.0) p.value *= static_cast<Scalar>(1.0 - lr * weight_decay_);
      const Scalar step_size = static_cast<Scalar>(lr / c1);
      const Scalar inv_c2 = static_cast<Scalar>(1.0 / c2);
      const Scalar eps = static_cast<Scalar>(eps_);
      p.value.array() -= step_size * first_[i].array() / ((second_[i].array() * inv_c2).sqrt() + eps);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  long steps() const { return t_; }

 private:
  ParameterList<Scalar> params_;
  std::vector<Matrix<Scalar>> first_;
  std::vector<Matrix<Scalar>> second_;
  double beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
};

}  // namespace latentstory
