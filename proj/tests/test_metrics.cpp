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

#include "latentstory/errors.hpp"
#include "latentstory/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace latentstory;

namespace {

// Brute-force bigram profile of one text, kept separate from the library's n-gram code.
std::map<std::string, double> bigram_oracle(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> w;
  for (std::string t; in >> t;) w.push_back(t);
  std::map<std::string, double> m;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) m[w[i] + " " + w[i + 1]] += 1.0;
  return m;
}

std::vector<std::string> random_corpus(std::mt19937_64& rng, int docs, int len, int vocab) {
  std::uniform_int_distribution<int> pick(0, vocab - 1);
  std::vector<std::string> out;
  for (int d = 0; d < docs; ++d) {
    std::string s;
    for (int i = 0; i < len; ++i) s += (i ? " w" : "w") + std::to_string(pick(rng));
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("bleu") {
  CHECK(bleu({"a b c d e"}, {"a b c d e"}, 4) == doctest::Approx(100.0));
  CHECK(bleu({"a b c d"}, {"a b c e"}, 1) == doctest::Approx(75.0));
  CHECK(bleu({"x y z w"}, {"a b c d"}, 2) == doctest::Approx(0.0));
  // Brevity penalty: 2 of 4 reference tokens, all matching.
  CHECK(bleu({"a b"}, {"a b c d"}, 1) == doctest::Approx(100.0 * std::exp(1.0 - 2.0)));
  // Bigram with no matches is smoothed: p1 = 3/4, p2 = 1 / (3 + 1).
  CHECK(bleu({"a c b d"}, {"a b c e"}, 2) == doctest::Approx(100.0 * std::sqrt(0.75 * 0.25)));
  CHECK_THROWS_AS(bleu({}, {}, 1), DataError);
  CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}, 1), DataError);
}

TEST_CASE("reverse bleu swaps roles") {
  const std::vector<std::string> h{"a b c", "d e"};
  const std::vector<std::string> r{"a b", "d e f g"};
  CHECK(reverse_bleu(h, r, 2) == doctest::Approx(bleu(r, h, 2)));
  CHECK(reverse_bleu(h, h, 2) == doctest::Approx(100.0));
  CHECK(reverse_bleu({"p q"}, {"a b"}, 1) == doctest::Approx(0.0));
}

TEST_CASE("msj worked example and oracle") {
  CHECK(msj({"a b a b"}, {"a b b b"}, 2) == doctest::Approx(20.0));
  CHECK(msj({"a b c"}, {"a b c"}, 3) == doctest::Approx(100.0));
  CHECK(msj({"a b"}, {"c d"}, 2) == doctest::Approx(0.0));

  std::mt19937_64 rng(5);
  const auto a = random_corpus(rng, 3, 12, 5);
  const auto b = random_corpus(rng, 5, 9, 5);
  std::map<std::string, double> fa, fb;
  for (const auto& t : a) for (const auto& [g, c] : bigram_oracle(t)) fa[g] += c / a.size();
  for (const auto& t : b) for (const auto& [g, c] : bigram_oracle(t)) fb[g] += c / b.size();
  double lo = 0, hi = 0;
  std::map<std::string, int> keys;
  for (const auto& [g, v] : fa) keys[g] = 1;
  for (const auto& [g, v] : fb) keys[g] = 1;
  for (const auto& [g, unused] : keys) {
    lo += std::min(fa[g], fb[g]);
    hi += std::max(fa[g], fb[g]);
  }
  CHECK(msj(a, b, 2) == doctest::Approx(100.0 * lo / hi));
  CHECK(msj(a, b, 2) == doctest::Approx(msj(b, a, 2)));
}

TEST_CASE("distinct") {
  CHECK(distinct({"a b a b"}, 2) == doctest::Approx(200.0 / 3.0));
  CHECK(distinct({"a b c d"}, 2) == doctest::Approx(100.0));
  CHECK(distinct({"a a a a a"}, 1) == doctest::Approx(20.0));
  CHECK_THROWS_AS(distinct({"a"}, 2), DataError);
}

TEST_CASE("rep-l") {
  CHECK(rep_l({"a", "a", "a", "a"}, 8) == doctest::Approx(0.75));
  CHECK(rep_l({"a", "b", "c"}, 8) == doctest::Approx(0.0));
  CHECK(rep_l({"a", "b", "a"}, 1) == doctest::Approx(0.0));
  CHECK(rep_l({"a", "b", "a"}, 2) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(rep_l({}, 8), DataError);
  CHECK_THROWS_AS(rep_l({"a"}, 0), ConfigError);
  // pooled: 3 hits over 4 positions plus 0 over 2
  CHECK(rep_l_corpus({"a a a a", "b c"}, 8) == doctest::Approx(0.5));
}

TEST_CASE("code utilization") {
  const std::vector<int> a{5, 5, 9, 7};
  const std::vector<int> same{3, 3, 3, 3, 3};
  const std::vector<int> all{1, 2, 3};
  CHECK(code_utilization(a) == doctest::Approx(0.75));
  CHECK(code_utilization(same) == doctest::Approx(0.2));
  CHECK(code_utilization(all) == doctest::Approx(1.0));
  CHECK_THROWS_AS(code_utilization(std::vector<int>{}), DataError);
}

TEST_CASE("kld and entropy in bits") {
  const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
  CHECK(entropy_bits(uniform) == doctest::Approx(2.0));
  CHECK(kld_bits(uniform, uniform) == doctest::Approx(0.0));
  const std::vector<double> p{0.5, 0.5, 0.0, 0.0};
  CHECK(entropy_bits(p) == doctest::Approx(1.0));
  // KL(p || uniform) = sum 0.5 * log2(0.5 / 0.25) = 1 bit
  CHECK(kld_bits(p, uniform) == doctest::Approx(1.0));
  CHECK_THROWS_AS(kld_bits(uniform, p), DataError);
  CHECK_THROWS_AS(entropy_bits(std::vector<double>{0.5, 0.2}), DataError);
}

TEST_CASE("metric ranges on random corpora") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_corpus(rng, 4, 10, 6);
    const auto b = random_corpus(rng, 4, 10, 6);
    CHECK(distinct(a, 2) <= 100.0);
    CHECK(msj(a, a, 2) == doctest::Approx(100.0));
    const double r = rep_l_corpus(a, 4);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    const double bl = bleu(a, b, 2);
    CHECK(bl >= 0.0);
    CHECK(bl <= 100.0);
  }
}

TEST_CASE("code marker statistics") {
  // Code 7 always covers "and then he left"; code 2 covers text whose 4-grams never repeat.
  std::vector<CodedStory> stories{
      {"and then he left x1 x2 x3 x4", {7, 2}},
      {"and then he left y1 y2 y3 y4", {7, 2}},
      {"q1 q2 q3 q4 and then he left", {3, 7}},
  };
  const auto stats = code_marker_stats(stories, 4);
  REQUIRE(stats.size() == 3);
  const auto find = [&](int code) {
    for (const auto& s : stats) if (s.code == code) return s;
    FAIL("missing code");
    return CodeMarkers{};
  };
  const auto c7 = find(7);
  REQUIRE(c7.top.size() == 2);
  CHECK(c7.qualifying_ngrams == 3);
  CHECK(c7.top[0].second == doctest::Approx(50.0));
  CHECK(((c7.top[0].first == "and" && c7.top[1].first == "then") || (c7.top[0].first == "then" && c7.top[1].first == "and")));
  CHECK(find(2).top.empty());
  CHECK(find(2).qualifying_ngrams == 0);
  // A 4-gram seen once is not enough.
  const auto single = code_marker_stats({{"and then he left", {9}}}, 4);
  REQUIRE(single.size() == 1);
  CHECK(single[0].top.empty());
  // Codes never emitted do not appear.
  for (const auto& s : stats) CHECK(s.code != 0);
}

TEST_CASE("report rendering") {
  MetricReport r = evaluate_texts({"a b and c d"}, {"a b and c d"});
  CHECK(r.scalars.at("bleu-1") == doctest::Approx(100.0));
  CHECK(r.discourse_from_surface);
  const auto j = r.to_json();
  CHECK(j["metrics"]["msj-2"].get<double>() == doctest::Approx(100.0));
  CHECK(r.to_table().find("bleu-1") != std::string::npos);
}
