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

// Explicit discourse relation extraction from dependency parses.
//
// A passage is a list of parsed sentences. Each sentence is split into at
// most two elementary discourse units (EDUs) by the most even intra-sentence
// marker pattern; adjacent EDUs receive "{marker}_{first}_{second}" labels,
// where first/second name which argument comes first in the text, or
// "unknown" when no relation links them.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace latentstory {

inline constexpr std::array<std::string_view, 10> kMarkers = {"although", "so",   "because", "before", "after",
                                                              "as",       "then", "and",     "also",   "still"};

enum class RelationCategory { Concession = 0, Causal = 1, Temporal = 2, Conjunction = 3 };

inline constexpr std::array<std::string_view, 4> kCategoryNames = {"Concession", "Causal", "Temporal", "Conjunction"};

/// Category of a marker in kMarkers; nullopt for any other word.
std::optional<RelationCategory> marker_category(std::string_view marker);
bool is_marker(std::string_view word);

inline constexpr std::string_view kUnknownLabel = "unknown";

/// The 21 relation classes: "unknown" first, then marker_arg1_arg2 and
/// marker_arg2_arg1 for each marker in kMarkers order.
const std::vector<std::string>& relation_labels();
/// Index into relation_labels(); throws DataError for an unknown string.
int relation_label_id(std::string_view label);
/// Marker part of a label, or empty for "unknown".
std::string_view label_marker(std::string_view label);

struct ParsedSentence {
  std::vector<std::string> words;
  std::vector<int> heads;  // 1-based head index, 0 for the root
  std::vector<std::string> deprels;

  int size() const { return static_cast<int>(words.size()); }
  /// Throws DataError unless the heads form one single-rooted tree.
  void validate() const;
};

/// Inclusive token span.
struct Span {
  int start = 0;
  int end = -1;
  int length() const { return end - start + 1; }
  bool operator==(const Span&) const = default;
};

struct DiscourseAnnotation {
  std::vector<Span> edus;
  std::vector<std::string> labels;  // labels[i] links edus[i] and edus[i + 1]

  bool operator==(const DiscourseAnnotation&) const = default;
};

/// One matched marker pattern.
struct Candidate {
  std::string marker;
  int marker_pos = 0;          // token index within the sentence
  bool next_sentence = false;  // Arg1 is the previous sentence
  bool arg2_first = false;     // Arg2 precedes Arg1 in the text
  // For intra-sentence candidates: the two EDUs the sentence splits into,
  // in text order. For next-sentence candidates: previous sentence span
  // (in its own indices) and the current sentence span.
  Span first;
  Span second;

  std::string label() const;
  int imbalance() const;
};

/// CoNLL-U reader. Comment lines, multi-word token ranges (1-2) and empty
/// nodes (1.1) are skipped; blank lines separate sentences.
std::vector<ParsedSentence> parse_conllu(std::string_view text);

/// Splits CoNLL-U into passages at "# newdoc" comments. Input without any
/// newdoc comment is one passage.
std::vector<std::vector<ParsedSentence>> parse_conllu_passages(std::string_view text);

std::string to_conllu(const std::vector<std::vector<ParsedSentence>>& passages);

std::vector<Candidate> match_patterns(const ParsedSentence& sentence, const ParsedSentence* previous);

/// Most even split; ties go to the leftmost marker.
std::optional<Candidate> select_candidate(const std::vector<Candidate>& candidates);

DiscourseAnnotation extract_annotations(const std::vector<ParsedSentence>& passage);

/// Category shares (Concession, Causal, Temporal, Conjunction) over
/// non-unknown labels. Throws DataError if there are none.
std::array<double, 4> relation_distribution(const std::vector<std::string>& labels);
std::array<double, 4> relation_distribution(const std::vector<DiscourseAnnotation>& annotations);

/// Surface fallback for unparsed text: every token that is a marker counts
/// once toward its category.
std::array<double, 4> marker_surface_distribution(const std::vector<std::vector<std::string>>& texts);

}  // namespace latentstory
