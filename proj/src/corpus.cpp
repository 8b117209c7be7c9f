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

#include "latentstory/corpus.hpp"

#include "latentstory/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace latentstory {

namespace {

constexpr std::array<std::string_view, 4> kSpecialTokens = {"<pad>", "<bos>", "<eos>", "<unk>"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() : Vocab(std::vector<std::string>(kSpecialTokens.begin(), kSpecialTokens.end())) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("vocab: duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::build(const std::vector<std::string>& texts, std::size_t max_size, std::size_t min_freq) {
  if (max_size < kNumSpecials) throw ConfigError("max_size: must be at least 4 to hold the special tokens");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(text)) {
      if (std::find(kSpecialTokens.begin(), kSpecialTokens.end(), tok) != kSpecialTokens.end()) continue;
      ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts) {
    if (n >= min_freq) ranked.emplace_back(tok, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens(kSpecialTokens.begin(), kSpecialTokens.end());
  for (auto& [tok, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(tok);
  }
  return Vocab(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecials) throw DataError("vocab: fewer than four tokens");
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    if (tokens[i] != kSpecialTokens[i]) {
      throw DataError("vocab: id " + std::to_string(i) + " must be " + std::string(kSpecialTokens[i]));
    }
  }
  return Vocab(std::move(tokens));
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocab: id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& tok : tokenize(text)) ids.push_back(id(tok));
  return ids;
}

std::string Vocab::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::string Vocab::decode_story(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Records

PaddedSequence pad_to_block(std::span<const int> ids, int block) {
  if (block <= 0) throw ConfigError("block: must be positive");
  PaddedSequence out;
  out.ids.assign(ids.begin(), ids.end());
  const std::size_t b = static_cast<std::size_t>(block);
  const std::size_t padded = std::max<std::size_t>(1, (ids.size() + b - 1) / b) * b;  // empty stories keep one block
  out.is_pad.assign(ids.size(), false);
  out.ids.resize(padded, Vocab::kPad);
  out.is_pad.resize(padded, true);
  return out;
}

int PromptStoryPair::story_length() const {
  return static_cast<int>(std::count(story_mask.begin(), story_mask.end(), false));
}

std::vector<RawRecord> parse_jsonl(std::string_view text) {
  std::vector<RawRecord> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError(where + ": expected a JSON object");
    RawRecord rec;
    for (const char* field : {"prompt", "story"}) {
      if (!j.contains(field)) throw DataError(where + ": missing field '" + field + "'");
      if (!j[field].is_string()) throw DataError(where + ": field '" + field + "' must be a string");
    }
    rec.prompt = j["prompt"].get<std::string>();
    rec.story = j["story"].get<std::string>();
    if (j.contains("annotation") && !j["annotation"].is_null()) {
      const auto& a = j["annotation"];
      if (!a.contains("edus")) throw DataError(where + ": missing field 'annotation.edus'");
      if (!a.contains("labels")) throw DataError(where + ": missing field 'annotation.labels'");
      DiscourseAnnotation ann;
      try {
        for (const auto& e : a["edus"]) ann.edus.push_back(Span{e.at(0).get<int>(), e.at(1).get<int>()});
        for (const auto& l : a["labels"]) ann.labels.push_back(l.get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": malformed annotation (" + e.what() + ")");
      }
      if (!ann.edus.empty() && ann.labels.size() + 1 != ann.edus.size()) {
        throw DataError(where + ": annotation needs exactly one label per adjacent EDU pair");
      }
      rec.annotation = std::move(ann);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> read_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path)); }

PromptStoryPair encode_record(const RawRecord& record, const Vocab& vocab, const LoadOptions& opts) {
  PromptStoryPair pair;
  pair.prompt_ids = vocab.encode(record.prompt);
  if (static_cast<int>(pair.prompt_ids.size()) > opts.max_src_len) pair.prompt_ids.resize(static_cast<std::size_t>(opts.max_src_len));
  std::vector<int> story = vocab.encode(record.story);
  if (static_cast<int>(story.size()) > opts.max_story_len) story.resize(static_cast<std::size_t>(opts.max_story_len));
  const int kept = static_cast<int>(story.size());
  auto padded = pad_to_block(story, 1 << opts.cnn_layers);
  pair.story_ids = std::move(padded.ids);
  pair.story_mask = std::move(padded.is_pad);
  if (record.annotation) {
    DiscourseAnnotation ann;
    for (const auto& e : record.annotation->edus) {
      if (e.start >= kept) break;
      ann.edus.push_back(Span{e.start, std::min(e.end, kept - 1)});
    }
    for (std::size_t i = 0; i + 1 < ann.edus.size(); ++i) ann.labels.push_back(record.annotation->labels[i]);
    pair.annotation = std::move(ann);
  }
  return pair;
}

std::vector<PromptStoryPair> load_jsonl(const std::filesystem::path& path, const Vocab& vocab, const LoadOptions& opts) {
  std::vector<PromptStoryPair> out;
  for (const auto& rec : read_jsonl(path)) out.push_back(encode_record(rec, vocab, opts));
  return out;
}

std::string annotation_to_json(const DiscourseAnnotation& ann) {
  nlohmann::json j;
  j["edus"] = nlohmann::json::array();
  for (const auto& e : ann.edus) j["edus"].push_back({e.start, e.end});
  j["labels"] = ann.labels;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

struct Lexicon {
  std::vector<std::string> subjects, verbs, objects;
};

Lexicon make_lexicon(int vocab_size) {
  // specials, markers, "the", "," and "."
  const int fixed = 4 + static_cast<int>(kMarkers.size()) + 3;
  const int budget = vocab_size - fixed;
  if (budget < 3) throw ConfigError("vocab_size: must be at least " + std::to_string(fixed + 3));
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::vector<std::string> syllables;
  for (char c : consonants) {
    for (char v : vowels) syllables.push_back(std::string{c, v});
  }
  std::vector<std::string> stems;
  for (const auto& a : syllables) {
    for (const auto& b : syllables) stems.push_back(a + b);
  }
  // Fixed shuffle so the lexicon does not depend on the corpus seed.
  std::mt19937_64 rng(0x5eed);
  std::shuffle(stems.begin(), stems.end(), rng);
  Lexicon lex;
  const int n_subj = budget / 3;
  const int n_verb = budget / 3;
  const int n_obj = budget - n_subj - n_verb;
  std::size_t next = 0;
  for (int i = 0; i < n_subj; ++i) lex.subjects.push_back(stems[next++]);
  for (int i = 0; i < n_verb; ++i) lex.verbs.push_back(stems[next++] + "s");
  for (int i = 0; i < n_obj; ++i) lex.objects.push_back(stems[next++] + "n");
  return lex;
}

struct Clause {
  std::string subject, verb, object;
};

// Sentence under construction, 0-based heads (-1 for root) converted on finish.
struct SentenceBuilder {
  std::vector<std::string> words;
  std::vector<int> heads;
  std::vector<std::string> rels;

  int add(std::string word, int head, std::string rel) {
    words.push_back(std::move(word));
    heads.push_back(head);
    rels.push_back(std::move(rel));
    return static_cast<int>(words.size()) - 1;
  }
  // Appends "S V the O"; returns the verb index. Verb head is patched later.
  int add_clause(const Clause& c) {
    const int base = static_cast<int>(words.size());
    add(c.subject, base + 1, "nsubj");
    add(c.verb, -1, "root");
    add("the", base + 3, "det");
    add(c.object, base + 1, "obj");
    return base + 1;
  }
  ParsedSentence finish() const {
    ParsedSentence s;
    s.words = words;
    s.deprels = rels;
    for (int h : heads) s.heads.push_back(h + 1);
    return s;
  }
};

struct SynthSentence {
  ParsedSentence parse;
  std::vector<Span> edus;  // local
  std::optional<std::string> intra_label;
  bool links_previous = false;  // "also" sentence
  std::vector<std::string> prompt_words;
};

SynthSentence plain_sentence(const Clause& a) {
  SentenceBuilder b;
  const int v = b.add_clause(a);
  b.add(".", v, "punct");
  SynthSentence s;
  s.parse = b.finish();
  s.edus = {Span{0, 4}};
  s.prompt_words = {a.subject, a.verb, a.object};
  return s;
}

SynthSentence also_sentence(const Clause& a) {
  SentenceBuilder b;
  b.add(a.subject, 2, "nsubj");
  b.add("also", 2, "advmod");
  b.add(a.verb, -1, "root");
  b.add("the", 4, "det");
  b.add(a.object, 2, "obj");
  b.add(".", 2, "punct");
  SynthSentence s;
  s.parse = b.finish();
  s.edus = {Span{0, 5}};
  s.links_previous = true;
  s.prompt_words = {a.subject, "also", a.verb, a.object};
  return s;
}

// Two clauses joined by an intra-sentence marker; a is Arg1, c is Arg2.
SynthSentence joined_sentence(const std::string& marker, const Clause& a, const Clause& c, bool arg2_first) {
  SentenceBuilder b;
  SynthSentence s;
  const bool mark_advcl = marker == "although" || marker == "because" || marker == "before" || marker == "after" ||
                          marker == "as" || marker == "so";
  if (arg2_first) {
    // M C , A .
    const int m = b.add(marker, -1, "mark");
    const int vc = b.add_clause(c);
    const int comma = b.add(",", -1, "punct");
    const int va = b.add_clause(a);
    b.add(".", va, "punct");
    b.heads[m] = vc;
    b.heads[vc] = va;
    b.rels[vc] = "advcl";
    b.heads[comma] = va;
    s.edus = {Span{0, comma}, Span{comma + 1, static_cast<int>(b.words.size()) - 1}};
    s.intra_label = marker + "_arg2_arg1";
    s.prompt_words = {marker, c.subject, c.verb, c.object, a.subject, a.verb, a.object};
  } else {
    // A [,] M C .
    const int va = b.add_clause(a);
    const bool comma = marker == "so" || marker == "then";
    if (comma) b.add(",", va, "punct");
    const int m = b.add(marker, -1, "");
    const int vc = b.add_clause(c);
    b.add(".", va, "punct");
    b.heads[m] = vc;
    b.heads[vc] = va;
    if (mark_advcl) {
      b.rels[m] = "mark";
      b.rels[vc] = "advcl";
    } else if (marker == "then") {
      b.rels[m] = "advmod";
      b.rels[vc] = "parataxis";
    } else if (marker == "and") {
      b.rels[m] = "cc";
      b.rels[vc] = "conj";
    } else {  // still
      b.rels[m] = "advmod";
      b.rels[vc] = "dep";
    }
    s.edus = {Span{0, m - 1}, Span{m, static_cast<int>(b.words.size()) - 1}};
    s.intra_label = marker + "_arg1_arg2";
    s.prompt_words = {a.subject, a.verb, a.object, marker, c.subject, c.verb, c.object};
  }
  s.parse = b.finish();
  return s;
}

std::vector<double> marker_weights(const SynthSpec& spec) {
  std::vector<double> w(kMarkers.size(), spec.marker_mix.empty() ? 1.0 : 0.0);
  if (spec.marker_mix.empty()) return w;
  double total = 0;
  for (const auto& [marker, p] : spec.marker_mix) {
    auto it = std::find(kMarkers.begin(), kMarkers.end(), marker);
    if (it == kMarkers.end()) throw ConfigError("marker_mix: '" + marker + "' is not a supported marker");
    if (!(p >= 0.0)) throw ConfigError("marker_mix: probabilities must be non-negative");
    w[static_cast<std::size_t>(it - kMarkers.begin())] = p;
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("marker_mix: probabilities must sum to 1");
  return w;
}

}  // namespace

std::vector<SynthDocument> synth_corpus(const SynthSpec& spec) {
  if (spec.n_docs < 0) throw ConfigError("n_docs: must be >= 0");
  if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens) throw ConfigError("length_range: need 1 <= min <= max");
  if (spec.max_tokens < 5) throw ConfigError("length_range: max must allow one 5-token sentence");
  if (spec.relation_rate < 0.0 || spec.relation_rate > 1.0) throw ConfigError("relation_rate: must lie in [0, 1]");
  const Lexicon lex = make_lexicon(spec.vocab_size);
  const auto weights = marker_weights(spec);

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick_subj(0, lex.subjects.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_verb(0, lex.verbs.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_obj(0, lex.objects.size() - 1);
  std::discrete_distribution<std::size_t> pick_marker(weights.begin(), weights.end());
  std::bernoulli_distribution has_relation(spec.relation_rate);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> pick_len(spec.min_tokens, spec.max_tokens);

  auto clause = [&] { return Clause{lex.subjects[pick_subj(rng)], lex.verbs[pick_verb(rng)], lex.objects[pick_obj(rng)]}; };

  std::vector<SynthDocument> docs;
  docs.reserve(static_cast<std::size_t>(spec.n_docs));
  for (int d = 0; d < spec.n_docs; ++d) {
    const int target = pick_len(rng);
    std::vector<SynthSentence> sentences;
    int length = 0;
    while (length < target) {
      SynthSentence s;
      if (has_relation(rng)) {
        const std::string marker(kMarkers[pick_marker(rng)]);
        if (marker == "also") {
          s = sentences.empty() ? plain_sentence(clause()) : also_sentence(clause());
        } else {
          const bool initial_ok = marker == "although" || marker == "because" || marker == "before" ||
                                  marker == "after" || marker == "as";
          const bool arg2_first = initial_ok && coin(rng);
          const Clause a = clause();
          const Clause c = clause();
          s = joined_sentence(marker, a, c, arg2_first);
        }
      } else {
        s = plain_sentence(clause());
      }
      if (length + s.parse.size() > spec.max_tokens) {
        s = plain_sentence(clause());
        if (length + s.parse.size() > spec.max_tokens) break;
      }
      length += s.parse.size();
      sentences.push_back(std::move(s));
    }

    SynthDocument doc;
    std::vector<std::string> story_words;
    std::vector<std::string> prompt_words;
    int offset = 0;
    for (const auto& s : sentences) {
      if (!doc.annotation.edus.empty()) {
        doc.annotation.labels.push_back(s.links_previous ? "also_arg1_arg2" : std::string(kUnknownLabel));
      }
      for (const auto& e : s.edus) doc.annotation.edus.push_back(Span{offset + e.start, offset + e.end});
      if (s.intra_label) doc.annotation.labels.push_back(*s.intra_label);
      story_words.insert(story_words.end(), s.parse.words.begin(), s.parse.words.end());
      prompt_words.insert(prompt_words.end(), s.prompt_words.begin(), s.prompt_words.end());
      offset += s.parse.size();
      doc.sentences.push_back(s.parse);
    }
    if (spec.prompt_mode == PromptMode::Title && !sentences.empty()) {
      // Subject and object of the first clause.
      const auto& first = sentences.front().parse;
      std::string subject, object;
      for (int i = 0; i < first.size(); ++i) {
        if (first.deprels[i] == "nsubj" && subject.empty()) subject = first.words[i];
        if (first.deprels[i] == "obj" && object.empty()) object = first.words[i];
      }
      prompt_words = {subject, object};
    }
    auto join = [](const std::vector<std::string>& words) {
      std::string out;
      for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
      }
      return out;
    };
    doc.story = join(story_words);
    doc.prompt = join(prompt_words);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::string to_jsonl_line(const SynthDocument& doc) {
  nlohmann::json j;
  j["prompt"] = doc.prompt;
  j["story"] = doc.story;
  j["annotation"] = nlohmann::json::parse(annotation_to_json(doc.annotation));
  return j.dump();
}

}  // namespace latentstory
