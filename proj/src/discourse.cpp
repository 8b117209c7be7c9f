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

#include "latentstory/discourse.hpp"

#include "latentstory/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace latentstory {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// "advcl:relcl" -> "advcl"
std::string_view base_relation(std::string_view rel) { return rel.substr(0, rel.find(':')); }

bool is_punct(const ParsedSentence& s, int i) {
  if (base_relation(s.deprels[i]) == "punct") return true;
  const std::string& w = s.words[i];
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; });
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

// Smallest span covering the subtree rooted at node (0-based).
Span subtree_span(const ParsedSentence& s, int node) {
  std::vector<std::vector<int>> children(s.words.size());
  for (int i = 0; i < s.size(); ++i) {
    if (s.heads[i] > 0) children[s.heads[i] - 1].push_back(i);
  }
  Span span{node, node};
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    span.start = std::min(span.start, cur);
    span.end = std::max(span.end, cur);
    for (int c : children[cur]) stack.push_back(c);
  }
  return span;
}

// Which intra-sentence pattern (marker relation, clause relation) a marker uses.
std::optional<std::pair<std::string_view, std::string_view>> intra_pattern(std::string_view marker) {
  if (marker == "then") return std::make_pair(std::string_view("advmod"), std::string_view("parataxis"));
  if (marker == "and") return std::make_pair(std::string_view("cc"), std::string_view("conj"));
  if (marker == "still") return std::make_pair(std::string_view("advmod"), std::string_view("dep"));
  if (marker == "also") return std::nullopt;
  return std::make_pair(std::string_view("mark"), std::string_view("advcl"));
}

// Splits a sentence into two contiguous EDUs around the Arg2 subtree.
std::optional<Candidate> split_around(const ParsedSentence& s, Span arg2) {
  const int n = s.size();
  bool content_before = false;
  bool content_after = false;
  for (int i = 0; i < arg2.start; ++i) content_before = content_before || !is_punct(s, i);
  for (int i = arg2.end + 1; i < n; ++i) content_after = content_after || !is_punct(s, i);
  if (content_before == content_after) return std::nullopt;  // Arg2 in the middle, or Arg1 empty

  Candidate c;
  if (!content_before) {
    c.arg2_first = true;
    c.first = Span{0, arg2.end};
  } else {
    c.arg2_first = false;
    c.first = Span{0, arg2.start - 1};
  }
  // Punctuation opening the second EDU belongs to the preceding one.
  while (c.first.end + 1 < n && is_punct(s, c.first.end + 1)) ++c.first.end;
  c.second = Span{c.first.end + 1, n - 1};
  if (c.second.length() <= 0 || c.first.length() <= 0) return std::nullopt;
  return c;
}

}  // namespace

std::optional<RelationCategory> marker_category(std::string_view marker) {
  if (marker == "although") return RelationCategory::Concession;
  if (marker == "because" || marker == "so") return RelationCategory::Causal;
  if (marker == "before" || marker == "after" || marker == "as" || marker == "then") return RelationCategory::Temporal;
  if (marker == "and" || marker == "also" || marker == "still") return RelationCategory::Conjunction;
  return std::nullopt;
}

bool is_marker(std::string_view word) { return marker_category(word).has_value(); }

const std::vector<std::string>& relation_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out{std::string(kUnknownLabel)};
    for (auto m : kMarkers) {
      out.push_back(std::string(m) + "_arg1_arg2");
      out.push_back(std::string(m) + "_arg2_arg1");
    }
    return out;
  }();
  return labels;
}

int relation_label_id(std::string_view label) {
  const auto& labels = relation_labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return static_cast<int>(i);
  }
  throw DataError("unknown discourse label '" + std::string(label) + "'");
}

std::string_view label_marker(std::string_view label) {
  if (label == kUnknownLabel) return {};
  return label.substr(0, label.find('_'));
}

void ParsedSentence::validate() const {
  const int n = size();
  if (static_cast<int>(heads.size()) != n || static_cast<int>(deprels.size()) != n) {
    throw DataError("parsed sentence: words, heads and deprels differ in length");
  }
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n) throw DataError("parsed sentence: head index out of range at token " + std::to_string(i + 1));
    if (heads[i] == i + 1) throw DataError("parsed sentence: token " + std::to_string(i + 1) + " heads itself");
    if (heads[i] == 0) ++roots;
  }
  if (n > 0 && roots != 1) throw DataError("parsed sentence: expected exactly one root, found " + std::to_string(roots));
  for (int i = 0; i < n; ++i) {
    int cur = i;
    for (int steps = 0; heads[cur] != 0; ++steps) {
      if (steps > n) throw DataError("parsed sentence: head cycle through token " + std::to_string(i + 1));
      cur = heads[cur] - 1;
    }
  }
}

std::string Candidate::label() const { return marker + (arg2_first ? "_arg2_arg1" : "_arg1_arg2"); }

int Candidate::imbalance() const { return std::abs(first.length() - second.length()); }

std::vector<std::vector<ParsedSentence>> parse_conllu_passages(std::string_view text) {
  std::vector<std::vector<ParsedSentence>> passages(1);
  ParsedSentence current;
  int line_no = 0;
  auto finish = [&] {
    if (current.words.empty()) return;
    current.validate();
    passages.back().push_back(std::move(current));
    current = ParsedSentence{};
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      finish();
      continue;
    }
    if (line.front() == '#') {
      if (line.rfind("# newdoc", 0) == 0) {
        finish();
        if (!passages.back().empty()) passages.emplace_back();
      }
      continue;
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 10) {
      throw DataError("line " + std::to_string(line_no) + ": expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) continue;
    int id = 0;
    int head = 0;
    auto parse_int = [&](std::string_view field, int& out, const char* what) {
      const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw DataError("line " + std::to_string(line_no) + ": non-integer " + what + " '" + std::string(field) + "'");
      }
    };
    parse_int(cols[0], id, "id");
    parse_int(cols[6], head, "head");
    if (id != current.size() + 1) throw DataError("line " + std::to_string(line_no) + ": token ids must be consecutive from 1");
    current.words.emplace_back(cols[1]);
    current.heads.push_back(head);
    current.deprels.emplace_back(cols[7]);
    if (nl == text.size()) break;
  }
  finish();
  if (passages.back().empty()) passages.pop_back();
  return passages;
}

std::vector<ParsedSentence> parse_conllu(std::string_view text) {
  std::vector<ParsedSentence> out;
  for (auto& passage : parse_conllu_passages(text)) {
    for (auto& s : passage) out.push_back(std::move(s));
  }
  return out;
}

std::string to_conllu(const std::vector<std::vector<ParsedSentence>>& passages) {
  std::ostringstream os;
  for (std::size_t p = 0; p < passages.size(); ++p) {
    os << "# newdoc id = doc" << p << "\n";
    for (const auto& s : passages[p]) {
      os << "# text =";
      for (const auto& w : s.words) os << ' ' << w;
      os << "\n";
      for (int i = 0; i < s.size(); ++i) {
        os << (i + 1) << '\t' << s.words[i] << "\t_\t_\t_\t_\t" << s.heads[i] << '\t' << s.deprels[i] << "\t_\t_\n";
      }
      os << "\n";
    }
  }
  return os.str();
}

std::vector<Candidate> match_patterns(const ParsedSentence& s, const ParsedSentence* previous) {
  std::vector<Candidate> out;
  for (int i = 0; i < s.size(); ++i) {
    const std::string word = lower(s.words[i]);
    if (!is_marker(word)) continue;
    const int head = s.heads[i] - 1;
    if (head < 0) continue;
    const auto pattern = intra_pattern(word);
    const bool intra = pattern && base_relation(s.deprels[i]) == pattern->first &&
                       base_relation(s.deprels[head]) == pattern->second && s.heads[head] != 0;
    if (intra) {
      if (auto c = split_around(s, subtree_span(s, head))) {
        c->marker = word;
        c->marker_pos = i;
        out.push_back(std::move(*c));
      }
      continue;
    }
    // Only one argument inside the sentence: Arg1 is the previous sentence.
    if (s.heads[head] == 0 && previous != nullptr && previous->size() > 0) {
      Candidate c;
      c.marker = word;
      c.marker_pos = i;
      c.next_sentence = true;
      c.arg2_first = false;
      c.first = Span{0, previous->size() - 1};
      c.second = Span{0, s.size() - 1};
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::optional<Candidate> select_candidate(const std::vector<Candidate>& candidates) {
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (best == nullptr || c.imbalance() < best->imbalance() ||
        (c.imbalance() == best->imbalance() && c.marker_pos < best->marker_pos)) {
      best = &c;
    }
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

DiscourseAnnotation extract_annotations(const std::vector<ParsedSentence>& passage) {
  DiscourseAnnotation ann;
  int offset = 0;
  const ParsedSentence* previous = nullptr;
  for (const auto& s : passage) {
    if (s.size() == 0) continue;
    const auto candidates = match_patterns(s, previous);
    std::vector<Candidate> intra;
    std::vector<Candidate> inter;
    for (const auto& c : candidates) (c.next_sentence ? inter : intra).push_back(c);

    if (!ann.edus.empty()) {
      const auto link = select_candidate(inter);
      ann.labels.push_back(link ? link->label() : std::string(kUnknownLabel));
    }
    if (const auto split = select_candidate(intra)) {
      ann.edus.push_back(Span{offset + split->first.start, offset + split->first.end});
      ann.edus.push_back(Span{offset + split->second.start, offset + split->second.end});
      ann.labels.push_back(split->label());
    } else {
      ann.edus.push_back(Span{offset, offset + s.size() - 1});
    }
    offset += s.size();
    previous = &s;
  }
  return ann;
}

std::array<double, 4> relation_distribution(const std::vector<std::string>& labels) {
  std::array<double, 4> counts{};
  double total = 0;
  for (const auto& label : labels) {
    if (label == kUnknownLabel) continue;
    const auto cat = marker_category(label_marker(label));
    if (!cat) throw DataError("unknown discourse label '" + label + "'");
    counts[static_cast<int>(*cat)] += 1;
    total += 1;
  }
  if (total == 0) throw DataError("no explicit relations found");
  for (double& c : counts) c /= total;
  return counts;
}

std::array<double, 4> relation_distribution(const std::vector<DiscourseAnnotation>& annotations) {
  std::vector<std::string> labels;
  for (const auto& a : annotations) labels.insert(labels.end(), a.labels.begin(), a.labels.end());
  return relation_distribution(labels);
}

std::array<double, 4> marker_surface_distribution(const std::vector<std::vector<std::string>>& texts) {
  std::array<double, 4> counts{};
  double total = 0;
  for (const auto& text : texts) {
    for (const auto& tok : text) {
      if (const auto cat = marker_category(lower(tok))) {
        counts[static_cast<int>(*cat)] += 1;
        total += 1;
      }
    }
  }
  if (total == 0) throw DataError("no explicit relations found");
  for (double& c : counts) c /= total;
  return counts;
}

}  // namespace latentstory
