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

#include <doctest.h>
#include <json.hpp>

using namespace latentstory;

TEST_CASE("default configs validate") {
  ModelConfig m;
  m.vocab_size = 100;
  CHECK_NOTHROW(validate(m));
  CHECK_NOTHROW(validate(TrainConfig{}));
  CHECK_NOTHROW(validate(SamplingConfig{}));
  CHECK(m.block() == 8);
  CHECK(m.prior_vocab() == 259);
  CHECK(m.prior_bos() == 256);
  CHECK(m.prior_eos() == 257);
  CHECK(m.prior_pad() == 258);
}

TEST_CASE("invalid model configs name the field") {
  const auto expect = [](auto mutate, const std::string& field) {
    ModelConfig m;
    m.vocab_size = 100;
    mutate(m);
    try {
      validate(m);
      FAIL("expected ConfigError for " << field);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).rfind(field, 0) == 0, e.what());
    }
  };
  expect([](ModelConfig& m) { m.heads = 3; }, "heads");
  expect([](ModelConfig& m) { m.vocab_size = 2; }, "vocab_size");
  expect([](ModelConfig& m) { m.dropout = 1.0; }, "dropout");
  expect([](ModelConfig& m) { m.max_positions = 600; }, "max_positions");
  expect([](ModelConfig& m) { m.codes = 1; }, "codes");
  expect([](ModelConfig& m) { m.max_story_len = 500; }, "max_story_len");
  expect([](ModelConfig& m) { m.prior_max_codes = 0; }, "prior_max_codes");
}

TEST_CASE("invalid train and sampling configs") {
  TrainConfig t;
  t.stage = "pretrain";
  CHECK_THROWS_AS(validate(t), ConfigError);
  t = TrainConfig{};
  t.tau_min = 1.0;
  CHECK_THROWS_AS(validate(t), ConfigError);
  t = TrainConfig{};
  t.batch_size = 0;
  CHECK_THROWS_AS(validate(t), ConfigError);
  SamplingConfig s;
  s.p = 1.5;
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = SamplingConfig{};
  s.min_tokens = 600;
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = SamplingConfig{};
  s.temperature = 0.0;
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("config json round trip fills defaults") {
  ModelConfig m;
  m.vocab_size = 77;
  m.codes = 31;
  const nlohmann::json j = m;
  CHECK(j.get<ModelConfig>() == m);
  const auto partial = nlohmann::json::parse(R"({"vocab_size": 50, "d_model": 64})").get<ModelConfig>();
  CHECK(partial.d_model == 64);
  CHECK(partial.codes == ModelConfig{}.codes);
  CHECK(TrainConfig{}.parsed_stage() == Stage::FineTune);
}
