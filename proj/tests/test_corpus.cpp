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
#include "latentstory/corpus.hpp"
#include "latentstory/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <set>

using namespace latentstory;

TEST_CASE("vocab ordering and specials") {
  const Vocab v = Vocab::build({"b a c a", "a b d"}, 100, 1);
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<bos>", "<eos>", "<unk>", "a", "b", "c", "d"});
  CHECK(v.id("zzz") == Vocab::kUnk);
  CHECK(v.encode("a d q") == std::vector<int>{4, 7, Vocab::kUnk});
  CHECK(Vocab::build({"b a c a", "a b d"}, 6, 1).size() == 6);
  CHECK(Vocab::build({"b a c a", "a b d"}, 100, 2).size() == 6);
  const std::vector<int> ids{4, 5, Vocab::kEos, 6, Vocab::kPad};
  CHECK(v.decode_story(ids) == "a b");
  CHECK_THROWS_AS(Vocab::from_tokens({"<pad>", "<bos>", "x", "<unk>"}), DataError);
  CHECK_THROWS_AS(Vocab::from_tokens({"<pad>", "<bos>", "<eos>", "<unk>", "a", "a"}), DataError);
}

TEST_CASE("vocab file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "latentstory_vocab_test.txt";
  const Vocab v = Vocab::build({"x y z y"}, 50, 1);
  v.save(path);
  CHECK(Vocab::load(path) == v);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Vocab::load(path), DataError);
}

TEST_CASE("block padding") {
  const std::vector<int> ids{5, 6, 7, 8, 9};
  const auto p = pad_to_block(ids, 4);
  CHECK(p.ids == std::vector<int>{5, 6, 7, 8, 9, 0, 0, 0});
  CHECK(p.is_pad == std::vector<bool>{false, false, false, false, false, true, true, true});
  CHECK(pad_to_block(std::vector<int>{1, 2, 3, 4}, 4).ids.size() == 4);
  CHECK(pad_to_block(std::vector<int>{}, 8).ids.size() == 8);
}

TEST_CASE("jsonl errors name the line and field") {
  const auto expect = [](std::string_view text, const std::string& fragment) {
    try {
      (void)parse_jsonl(text);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  expect("{\"prompt\":\"a\",\"story\":\"b\"}\n{\"prompt\":\"a\"}\n", "line 2: missing field 'story'");
  expect("{\"prompt\":\"a\",\"story\":\"b\"}\n\n{oops\n", "line 3: malformed JSON");
  expect("[1,2]\n", "line 1: expected a JSON object");
  expect("{\"prompt\":1,\"story\":\"b\"}\n", "'prompt' must be a string");
  expect("{\"prompt\":\"a\",\"story\":\"b\",\"annotation\":{\"edus\":[[0,1],[2,3]],\"labels\":[]}}\n",
         "one label per adjacent EDU pair");
  CHECK(parse_jsonl("\n  \n").empty());
}

TEST_CASE("encoding truncates and clips annotations") {
  const Vocab v = Vocab::build({"a b c d e f g h i j"}, 100, 1);
  RawRecord rec{"a b c d e", "a b c d e f g h i j", DiscourseAnnotation{{{0, 3}, {4, 6}, {7, 9}}, {"and_arg1_arg2", "so_arg1_arg2"}}};
  const LoadOptions opts{3, 6, 2};
  const auto p = encode_record(rec, v, opts);
  CHECK(p.prompt_ids.size() == 3);
  CHECK(p.story_ids.size() == 8);
  CHECK(p.story_length() == 6);
  REQUIRE(p.annotation.has_value());
  CHECK(p.annotation->edus == std::vector<Span>{{0, 3}, {4, 5}});
  CHECK(p.annotation->labels == std::vector<std::string>{"and_arg1_arg2"});
}

TEST_CASE("synthetic corpus is seeded and self-consistent") {
  SynthSpec spec;
  spec.seed = 9;
  spec.n_docs = 60;
  spec.vocab_size = 80;
  const auto docs = synth_corpus(spec);
  REQUIRE(docs.size() == 60);
  CHECK(to_jsonl_line(docs[3]) == to_jsonl_line(synth_corpus(spec)[3]));
  spec.seed = 10;
  CHECK(to_jsonl_line(docs[3]) != to_jsonl_line(synth_corpus(spec)[3]));

  std::set<std::string> types;
  int relations = 0;
  for (const auto& d : docs) {
    for (const auto& t : tokenize(d.story)) types.insert(t);
    for (const auto& t : tokenize(d.prompt)) types.insert(t);
    const auto n = static_cast<int>(tokenize(d.story).size());
    CHECK(n >= spec.min_tokens);
    // The gold annotation is exactly what the extractor recovers from the parses.
    CHECK(extract_annotations(d.sentences) == d.annotation);
    for (const auto& s : d.sentences) CHECK_NOTHROW(s.validate());
    for (const auto& l : d.annotation.labels) relations += l != "unknown" ? 1 : 0;
    const auto line = nlohmann::json::parse(to_jsonl_line(d));
    CHECK(line["story"] == d.story);
  }
  CHECK(static_cast<int>(types.size()) + Vocab::kNumSpecials <= 80);
  CHECK(relations > 30);
  SynthSpec tiny;
  tiny.vocab_size = 10;
  CHECK_THROWS_AS(synth_corpus(tiny), ConfigError);
}

TEST_CASE("full prompts determine the story") {
  SynthSpec spec;
  spec.n_docs = 200;
  spec.prompt_mode = PromptMode::Full;
  std::map<std::string, std::string> seen;
  for (const auto& d : synth_corpus(spec)) {
    auto [it, inserted] = seen.emplace(d.prompt, d.story);
    if (!inserted) CHECK(it->second == d.story);
  }
}
