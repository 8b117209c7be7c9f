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

// Automatic evaluation metrics. Texts are whitespace-tokenized strings.
// Scores documented as "x100" are percentages.

#include <json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace latentstory {

using Ngram = std::vector<std::string>;

/// n-gram counts of one token sequence.
std::map<Ngram, long> ngram_counts(const std::vector<std::string>& tokens, int n);

/// Corpus BLEU up to order n with uniform weights and a brevity penalty, x100.
/// Zero matches at orders >= 2 are smoothed as 1 / (total + 1).
double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, int n);

/// BLEU with hypotheses and references swapped.
double reverse_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, int n);

/// Multiset Jaccard of mean per-text n-gram frequencies, x100.
double msj(const std::vector<std::string>& a, const std::vector<std::string>& b, int n);

/// Unique n-grams over total n-gram tokens across the corpus, x100.
double distinct(const std::vector<std::string>& texts, int n);

/// Fraction of positions whose token occurs among the previous l tokens.
double rep_l(const std::vector<std::string>& tokens, int l);

/// rep_l pooled over every position of every text.
double rep_l_corpus(const std::vector<std::string>& texts, int l);

/// Distinct codes over sequence length.
double code_utilization(std::span<const int> codes);

/// KL(p || q) in bits; p is the reference distribution.
double kld_bits(std::span<const double> p, std::span<const double> q);

double entropy_bits(std::span<const double> p);

struct CodedStory {
  std::string story;
  std::vector<int> codes;
};

struct CodeMarkers {
  int code = 0;
  long qualifying_ngrams = 0;  // occurrences of repeated 4-grams under this code
  std::vector<std::pair<std::string, double>> top;  // marker, percentage of marker hits
};

/// For each emitted code, collects the 4-grams inside its block-token segment
/// that occur at least min_repeats times under that code across the corpus,
/// counts discourse markers inside them and reports the top markers.
std::vector<CodeMarkers> code_marker_stats(const std::vector<CodedStory>& stories, int block, int top_k = 3,
                                           int min_repeats = 2);

/// Named scalars plus the four-way discourse distribution and provenance.
struct MetricReport {
  std::map<std::string, double> scalars;
  std::vector<double> discourse;
  bool discourse_from_surface = false;  // true when markers were matched on raw text
  nlohmann::json provenance = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Standard report for generated texts against references.
MetricReport evaluate_texts(const std::vector<std::string>& generated, const std::vector<std::string>& references);

}  // namespace latentstory
