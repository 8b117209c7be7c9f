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

// Saving and restoring generators and priors together with their vocabulary.

#include "latentstory/checkpoint.hpp"
#include "latentstory/config.hpp"
#include "latentstory/corpus.hpp"
#include "latentstory/generator.hpp"
#include "latentstory/prior.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace latentstory {

template <typename Model>
struct Loaded {
  std::unique_ptr<Model> model;
  Vocab vocab;
  nlohmann::json meta;
};

template <typename Model>
void save_model(const std::filesystem::path& path, const std::string& kind, Model& model, const Vocab& vocab,
                nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json meta = std::move(extra);
  meta["kind"] = kind;
  meta["model"] = model.config;
  meta["vocab"] = vocab.tokens();
  save_checkpoint(path, pack_parameters(model.parameters(), std::move(meta)));
}

template <typename Model>
Loaded<Model> load_model(const std::filesystem::path& path, const std::string& kind) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!ckpt.meta.contains("kind") || ckpt.meta["kind"] != kind) {
    throw CheckpointError("'" + path.string() + "' is not a " + kind + " checkpoint");
  }
  Loaded<Model> out;
  ModelConfig cfg;
  try {
    cfg = ckpt.meta.at("model").get<ModelConfig>();
    out.vocab = Vocab::from_tokens(ckpt.meta.at("vocab").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("'" + path.string() + "' has malformed metadata: " + e.what());
  }
  out.model = std::make_unique<Model>(cfg);
  unpack_parameters(ckpt, out.model->parameters());
  out.meta = std::move(ckpt.meta);
  return out;
}

template <typename Scalar>
Loaded<Generator<Scalar>> load_generator(const std::filesystem::path& path) {
  return load_model<Generator<Scalar>>(path, "generator");
}

template <typename Scalar>
Loaded<Prior<Scalar>> load_prior(const std::filesystem::path& path) {
  return load_model<Prior<Scalar>>(path, "prior");
}

}  // namespace latentstory
