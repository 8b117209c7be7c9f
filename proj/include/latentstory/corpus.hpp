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

// Dataset ingestion: whitespace vocabulary, JSONL prompt/story records,
// block padding for the CNN stack, and a seeded synthetic corpus with gold
// discourse annotations and matching dependency parses.

#include "latentstory/discourse.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace latentstory {

std::vector<std::string> tokenize(std::string_view text);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  /// Specials only.
  Vocab();

  /// Descending frequency, ties lexicographic; max_size counts the specials.
  static Vocab build(const std::vector<std::string>& texts, std::size_t max_size, std::size_t min_freq);

  /// tokens[i] gets id i; the first four must be the special tokens.
  static Vocab from_tokens(std::vector<std::string> tokens);

  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::string_view text) const;
  /// Space-joined tokens; specials render as their strings.
  std::string decode(std::span<const int> ids) const;
  /// Stops at the first eos and drops pad/bos.
  std::string decode_story(std::span<const int> ids) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  explicit Vocab(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct PaddedSequence {
  std::vector<int> ids;
  std::vector<bool> is_pad;
};

/// Pads with Vocab::kPad to the next multiple of block (at least one block).
PaddedSequence pad_to_block(std::span<const int> ids, int block);

struct RawRecord {
  std::string prompt;
  std::string story;
  std::optional<DiscourseAnnotation> annotation;
};

struct PromptStoryPair {
  std::vector<int> prompt_ids;
  std::vector<int> story_ids;  // padded to a multiple of the block size
  std::vector<bool> story_mask;  // true on pads
  std::optional<DiscourseAnnotation> annotation;

  int story_length() const;  // non-pad tokens
};

struct LoadOptions {
  int max_src_len = 16;
  int max_story_len = 512;
  int cnn_layers = 3;
};

/// Reads {"prompt", "story", optional "annotation"} lines. Errors name the
/// line number or the missing field.
std::vector<RawRecord> read_jsonl(const std::filesystem::path& path);
std::vector<RawRecord> parse_jsonl(std::string_view text);

/// Truncates prompts to max_src_len and stories to max_story_len, then pads
/// stories to a multiple of 2^cnn_layers. Annotations are clipped to the
/// kept tokens.
PromptStoryPair encode_record(const RawRecord& record, const Vocab& vocab, const LoadOptions& opts);
std::vector<PromptStoryPair> load_jsonl(const std::filesystem::path& path, const Vocab& vocab, const LoadOptions& opts);

std::string annotation_to_json(const DiscourseAnnotation& ann);

// ---------------------------------------------------------------------------
// Synthetic corpus.

enum class PromptMode {
  Title,  // a few content words from the first clause
  Full,   // every content word and marker; determines the story
};

struct SynthSpec {
  std::uint64_t seed = 1;
  int n_docs = 100;
  int vocab_size = 120;  // total, including specials, markers and punctuation
  std::map<std::string, double> marker_mix;  // empty: uniform over the ten markers
  double relation_rate = 0.7;  // chance that a sentence carries a marker
  int min_tokens = 16;
  int max_tokens = 40;
  PromptMode prompt_mode = PromptMode::Title;
};

struct SynthDocument {
  std::string prompt;
  std::string story;
  DiscourseAnnotation annotation;
  std::vector<ParsedSentence> sentences;
};

std::vector<SynthDocument> synth_corpus(const SynthSpec& spec);

/// JSONL line for a synthetic document (prompt, story, annotation).
std::string to_jsonl_line(const SynthDocument& doc);

}  // namespace latentstory
