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

// Checkpoint container.
//
// Layout (all integers little-endian):
//   8 bytes   magic "LSCKPT01"
//   u64       length of the metadata JSON, then the UTF-8 JSON bytes
//   u64       number of arrays
//   per array: u32 name length, name bytes, i64 rows, i64 cols,
//              rows * cols float64 values in row-major order
// The metadata holds "kind" ("generator" or "prior"), "model" (ModelConfig),
// "vocab" (token list, id = index) and whatever the writer adds.

#include "latentstory/autograd.hpp"
#include "latentstory/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace latentstory {

struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Matrix<double>>> arrays;

  const Matrix<double>* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <typename Scalar>
Checkpoint pack_parameters(const ParameterList<Scalar>& params, nlohmann::json meta) {
  Checkpoint ckpt;
  ckpt.meta = std::move(meta);
  for (const auto* p : params) ckpt.arrays.emplace_back(p->name, p->value.template cast<double>());
  return ckpt;
}

/// Copies arrays into params by name; every parameter must be present with
/// a matching shape.
template <typename Scalar>
void unpack_parameters(const Checkpoint& ckpt, const ParameterList<Scalar>& params) {
  for (auto* p : params) {
    const Matrix<double>* m = ckpt.find(p->name);
    if (m == nullptr) throw CheckpointError("checkpoint is missing parameter '" + p->name + "'");
    if (m->rows() != p->value.rows() || m->cols() != p->value.cols()) {
      throw CheckpointError("checkpoint parameter '" + p->name + "' has shape " + std::to_string(m->rows()) + "x" +
                            std::to_string(m->cols()) + ", model expects " + std::to_string(p->value.rows()) + "x" +
                            std::to_string(p->value.cols()));
    }
    p->value = m->template cast<Scalar>();
    p->zero_grad();
  }
}

}  // namespace latentstory
