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

#include "latentstory/metrics.hpp"

#include "latentstory/corpus.hpp"
#include "latentstory/discourse.hpp"
#include "latentstory/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

namespace latentstory {

namespace {

void require_order(int n) {
  if (n < 1) throw ConfigError("n: n-gram order must be >= 1");
}

std::vector<std::vector<std::string>> tokenize_all(const std::vector<std::string>& texts) {
  std::vector<std::vector<std::string>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

std::map<Ngram, double> mean_profile(const std::vector<std::string>& texts, int n) {
  std::map<Ngram, double> profile;
  for (const auto& t : texts) {
    for (const auto& [g, c] : ngram_counts(tokenize(t), n)) profile[g] += static_cast<double>(c);
  }
  for (auto& [g, v] : profile) v /= static_cast<double>(texts.size());
  return profile;
}

void check_distribution(std::span<const double> p, const char* name) {
  if (p.empty()) throw DataError(std::string(name) + ": empty distribution");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError(std::string(name) + ": probabilities must be finite and >= 0");
    sum += v;
  }
  // Published percentage rows are rounded, so allow a small slack.
  if (std::abs(sum - 1.0) > 1e-3) throw DataError(std::string(name) + ": probabilities sum to " + std::to_string(sum));
}

}  // namespace

std::map<Ngram, long> ngram_counts(const std::vector<std::string>& tokens, int n) {
  require_order(n);
  std::map<Ngram, long> counts;
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + un))];
  }
  return counts;
}

double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, int n) {
  require_order(n);
  if (hypotheses.empty()) throw DataError("bleu: empty corpus");
  if (hypotheses.size() != references.size()) {
    throw DataError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses but " + std::to_string(references.size()) +
                    " references");
  }
  const auto hyps = tokenize_all(hypotheses);
  const auto refs = tokenize_all(references);
  std::vector<long> matches(static_cast<std::size_t>(n), 0);
  std::vector<long> totals(static_cast<std::size_t>(n), 0);
  long hyp_len = 0;
  long ref_len = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    hyp_len += static_cast<long>(hyps[i].size());
    ref_len += static_cast<long>(refs[i].size());
    for (int k = 1; k <= n; ++k) {
      const auto hc = ngram_counts(hyps[i], k);
      const auto rc = ngram_counts(refs[i], k);
      for (const auto& [g, c] : hc) {
        totals[static_cast<std::size_t>(k - 1)] += c;
        const auto it = rc.find(g);
        if (it != rc.end()) matches[static_cast<std::size_t>(k - 1)] += std::min(c, it->second);
      }
    }
  }
  if (hyp_len == 0 || matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto m = static_cast<double>(matches[static_cast<std::size_t>(k)]);
    const auto t = static_cast<double>(totals[static_cast<std::size_t>(k)]);
    const double precision = m > 0.0 ? m / t : 1.0 / (t + 1.0);
    log_sum += std::log(precision);
  }
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum / n);
}

double reverse_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, int n) {
  return bleu(references, hypotheses, n);
}

double msj(const std::vector<std::string>& a, const std::vector<std::string>& b, int n) {
  require_order(n);
  if (a.empty() || b.empty()) throw DataError("msj: both corpora must be non-empty");
  const auto fa = mean_profile(a, n);
  const auto fb = mean_profile(b, n);
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& [g, va] : fa) {
    const auto it = fb.find(g);
    const double vb = it == fb.end() ? 0.0 : it->second;
    lo += std::min(va, vb);
    hi += std::max(va, vb);
  }
  for (const auto& [g, vb] : fb) {
    if (!fa.contains(g)) hi += vb;
  }
  if (hi == 0.0) return 100.0;  // two empty profiles are identical
  return 100.0 * lo / hi;
}

double distinct(const std::vector<std::string>& texts, int n) {
  require_order(n);
  std::set<Ngram> unique;
  long total = 0;
  for (const auto& t : texts) {
    for (const auto& [g, c] : ngram_counts(tokenize(t), n)) {
      unique.insert(g);
      total += c;
    }
  }
  if (total == 0) throw DataError("distinct: no " + std::to_string(n) + "-grams in the corpus");
  return 100.0 * static_cast<double>(unique.size()) / static_cast<double>(total);
}

namespace {

std::pair<long, long> rep_counts(const std::vector<std::string>& tokens, int l) {
  long hits = 0;
  const auto ul = static_cast<std::size_t>(l);
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const std::size_t from = t > ul ? t - ul : 0;
    if (std::find(tokens.begin() + static_cast<std::ptrdiff_t>(from), tokens.begin() + static_cast<std::ptrdiff_t>(t),
                  tokens[t]) != tokens.begin() + static_cast<std::ptrdiff_t>(t)) {
      ++hits;
    }
  }
  return {hits, static_cast<long>(tokens.size())};
}

}  // namespace

double rep_l(const std::vector<std::string>& tokens, int l) {
  if (l < 1) throw ConfigError("l: window must be >= 1");
  if (tokens.empty()) throw DataError("rep_l: empty token sequence");
  const auto [hits, total] = rep_counts(tokens, l);
  return static_cast<double>(hits) / static_cast<double>(total);
}

double rep_l_corpus(const std::vector<std::string>& texts, int l) {
  if (l < 1) throw ConfigError("l: window must be >= 1");
  long hits = 0;
  long total = 0;
  for (const auto& t : texts) {
    const auto [h, n] = rep_counts(tokenize(t), l);
    hits += h;
    total += n;
  }
  if (total == 0) throw DataError("rep_l: empty corpus");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double code_utilization(std::span<const int> codes) {
  if (codes.empty()) throw DataError("code_utilization: empty code sequence");
  const std::set<int> unique(codes.begin(), codes.end());
  return static_cast<double>(unique.size()) / static_cast<double>(codes.size());
}

double kld_bits(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DataError("kld_bits: distributions differ in length");
  check_distribution(p, "kld_bits p");
  check_distribution(q, "kld_bits q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw DataError("kld_bits: infinite divergence (q is zero at category " + std::to_string(i) + ")");
    kl += p[i] * std::log2(p[i] / q[i]);
  }
  return std::max(0.0, kl);
}

double entropy_bits(std::span<const double> p) {
  check_distribution(p, "entropy_bits");
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return std::max(0.0, h);
}

std::vector<CodeMarkers> code_marker_stats(const std::vector<CodedStory>& stories, int block, int top_k, int min_repeats) {
  if (block <= 0) throw ConfigError("block: must be positive");
  constexpr std::size_t kGram = 4;
  std::map<int, std::map<Ngram, long>> per_code;
  std::set<int> emitted;
  for (const auto& s : stories) {
    const auto tokens = tokenize(s.story);
    for (std::size_t i = 0; i < s.codes.size(); ++i) {
      emitted.insert(s.codes[i]);
      const std::size_t begin = i * static_cast<std::size_t>(block);
      const std::size_t end = std::min(tokens.size(), begin + static_cast<std::size_t>(block));
      auto& counts = per_code[s.codes[i]];
      for (std::size_t j = begin; j + kGram <= end; ++j) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(j), tokens.begin() + static_cast<std::ptrdiff_t>(j + kGram))];
      }
    }
  }
  std::vector<CodeMarkers> out;
  for (int code : emitted) {
    CodeMarkers cm;
    cm.code = code;
    std::map<std::string, long> markers;
    long marker_total = 0;
    for (const auto& [gram, count] : per_code[code]) {
      if (count < min_repeats) continue;
      cm.qualifying_ngrams += count;
      for (const auto& w : gram) {
        if (is_marker(w)) {
          markers[w] += count;
          marker_total += count;
        }
      }
    }
    std::vector<std::pair<std::string, long>> ranked(markers.begin(), markers.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < top_k; ++i) {
      cm.top.emplace_back(ranked[i].first, 100.0 * static_cast<double>(ranked[i].second) / static_cast<double>(marker_total));
    }
    out.push_back(std::move(cm));
  }
  return out;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["metrics"] = scalars;
  if (!discourse.empty()) {
    j["discourse_distribution"] = discourse;
    j["discourse_categories"] = std::vector<std::string>(kCategoryNames.begin(), kCategoryNames.end());
    j["discourse_from_surface_markers"] = discourse_from_surface;
  }
  j["provenance"] = provenance;
  return j;
}

std::string MetricReport::to_table() const {
  std::size_t width = 6;
  for (const auto& [k, v] : scalars) width = std::max(width, k.size());
  std::ostringstream out;
  char buf[64];
  for (const auto& [k, v] : scalars) {
    std::snprintf(buf, sizeof(buf), "%10.4f", v);
    out << k << std::string(width - k.size() + 2, ' ') << buf << '\n';
  }
  if (!discourse.empty()) {
    out << "discourse distribution" << (discourse_from_surface ? " (surface markers)" : "") << '\n';
    for (std::size_t i = 0; i < discourse.size(); ++i) {
      const std::string name = i < kCategoryNames.size() ? std::string(kCategoryNames[i]) : std::to_string(i);
      std::snprintf(buf, sizeof(buf), "%10.4f", discourse[i]);
      out << "  " << name << std::string(width > name.size() ? width - name.size() : 0, ' ') << buf << '\n';
    }
  }
  return out.str();
}

MetricReport evaluate_texts(const std::vector<std::string>& generated, const std::vector<std::string>& references) {
  MetricReport r;
  r.scalars["bleu-1"] = bleu(generated, references, 1);
  r.scalars["bleu-2"] = bleu(generated, references, 2);
  r.scalars["reverse-bleu-1"] = reverse_bleu(generated, references, 1);
  r.scalars["reverse-bleu-2"] = reverse_bleu(generated, references, 2);
  r.scalars["msj-2"] = msj(generated, references, 2);
  r.scalars["msj-3"] = msj(generated, references, 3);
  for (int n : {1, 2, 3, 4}) {
    try {
      r.scalars["distinct-" + std::to_string(n)] = distinct(generated, n);
    } catch (const DataError&) {
      // too short for this order; omit
    }
  }
  r.scalars["rep-8"] = rep_l_corpus(generated, 8);
  r.scalars["rep-16"] = rep_l_corpus(generated, 16);
  try {
    const auto dist = marker_surface_distribution(tokenize_all(generated));
    r.discourse.assign(dist.begin(), dist.end());
    r.discourse_from_surface = true;
  } catch (const DataError&) {
    // no markers in the generations
  }
  return r;
}

}  // namespace latentstory
