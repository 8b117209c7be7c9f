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

// Hand-built dependency trees for the ten marker patterns, plus the cases
// for the most-even-split rule and the unknown fallback.

#include "latentstory/discourse.hpp"

#include <string>
#include <tuple>
#include <vector>

namespace latentstory::testing {

using Token = std::tuple<std::string, int, std::string>;  // word, 1-based head, relation

inline ParsedSentence tree(const std::vector<Token>& tokens) {
  ParsedSentence s;
  for (const auto& [w, h, r] : tokens) {
    s.words.push_back(w);
    s.heads.push_back(h);
    s.deprels.push_back(r);
  }
  s.validate();
  return s;
}

struct PatternCase {
  std::string name;
  std::vector<ParsedSentence> passage;
  std::vector<std::string> labels;  // expected annotation labels
};

inline std::vector<PatternCase> pattern_cases() {
  std::vector<PatternCase> cases;
  cases.push_back({"(a) although", {tree({
      {"Although", 6, "mark"}, {"61", 3, "nummod"}, {"billion", 4, "nummod"}, {"people", 6, "nsubj"},
      {"have", 6, "aux"}, {"perished", 11, "advcl"}, {",", 11, "punct"}, {"Paul", 10, "nmod:poss"},
      {"'s", 8, "case"}, {"visions", 11, "nsubj"}, {"indicate", 0, "root"}, {"that", 15, "mark"},
      {"this", 15, "nsubj"}, {"is", 15, "cop"}, {"far", 11, "ccomp"}, {"from", 19, "case"},
      {"the", 19, "det"}, {"worst", 19, "amod"}, {"outcome", 15, "obl"}, {".", 11, "punct"}})},
      {"although_arg2_arg1"}});
  cases.push_back({"(b) so", {tree({
      {"Father", 2, "compound"}, {"Matthew", 3, "nsubj"}, {"decides", 0, "root"}, {"to", 5, "mark"},
      {"send", 3, "xcomp"}, {"him", 5, "obj"}, {"to", 8, "case"}, {"Rome", 5, "obl"}, {",", 13, "punct"},
      {"so", 13, "mark"}, {"he", 13, "nsubj"}, {"can", 13, "aux"}, {"attend", 3, "advcl"}, {"an", 16, "det"},
      {"exorcism", 16, "compound"}, {"class", 13, "obj"}, {"taught", 16, "acl"}, {"by", 20, "case"},
      {"his", 20, "nmod:poss"}, {"friend", 17, "obl"}, {".", 3, "punct"}})},
      {"so_arg1_arg2"}});
  cases.push_back({"(c) because", {tree({
      {"Because", 6, "mark"}, {"the", 3, "det"}, {"detectives", 6, "nsubj"}, {"do", 6, "aux"},
      {"not", 6, "advmod"}, {"believe", 10, "advcl"}, {"her", 6, "obj"}, {",", 10, "punct"},
      {"she", 10, "nsubj"}, {"decides", 0, "root"}, {"to", 12, "mark"}, {"contact", 10, "xcomp"},
      {"Gerard", 12, "obj"}, {"herself", 12, "nmod"}, {".", 10, "punct"}})},
      {"because_arg2_arg1"}});
  cases.push_back({"(d) before", {tree({
      {"He", 2, "nsubj"}, {"damages", 0, "root"}, {"the", 4, "det"}, {"stabilizer", 2, "obj"},
      {"before", 9, "mark"}, {"his", 7, "nmod:poss"}, {"teammates", 9, "nsubj"}, {"can", 9, "aux"},
      {"tie", 2, "advcl"}, {"him", 9, "obj"}, {"up", 9, "compound:prt"}, {"in", 14, "case"},
      {"the", 14, "det"}, {"shuttle", 9, "obl"}, {".", 2, "punct"}})},
      {"before_arg1_arg2"}});
  cases.push_back({"(e) after", {tree({
      {"After", 3, "mark"}, {"Cho", 3, "nsubj"}, {"calms", 8, "advcl"}, {"him", 3, "obj"},
      {"down", 3, "compound:prt"}, {",", 8, "punct"}, {"he", 8, "nsubj"}, {"follows", 0, "root"},
      {"the", 10, "det"}, {"captain", 12, "nmod:poss"}, {"'s", 10, "case"}, {"order", 8, "obj"},
      {"to", 14, "mark"}, {"fix", 12, "acl"}, {"the", 16, "det"}, {"drive", 14, "obj"}, {".", 8, "punct"}})},
      {"after_arg2_arg1"}});
  cases.push_back({"(f) as", {tree({
      {"As", 4, "mark"}, {"his", 3, "nmod:poss"}, {"powers", 4, "nsubj"}, {"drain", 7, "advcl"},
      {",", 7, "punct"}, {"Luthor", 7, "nsubj"}, {"wishes", 0, "root"}, {"the", 9, "det"},
      {"experience", 7, "obj"}, {"to", 11, "mark"}, {"continue", 7, "xcomp"}, {".", 7, "punct"}})},
      {"as_arg2_arg1"}});
  cases.push_back({"(g) then", {tree({
      {"Mason", 2, "nsubj"}, {"destroys", 0, "root"}, {"the", 4, "det"}, {"chips", 2, "obj"},
      {",", 7, "punct"}, {"then", 7, "advmod"}, {"surrenders", 2, "parataxis"}, {"to", 9, "case"},
      {"Hummel", 7, "obl"}, {".", 2, "punct"}})},
      {"then_arg1_arg2"}});
  cases.push_back({"(h) and", {tree({
      {"Nick", 2, "nsubj"}, {"blames", 0, "root"}, {"Jerry", 2, "obj"}, {"for", 5, "mark"},
      {"forcing", 2, "advcl"}, {"him", 5, "obj"}, {"into", 9, "case"}, {"the", 9, "det"},
      {"profession", 5, "obl"}, {"and", 11, "cc"}, {"asks", 2, "conj"}, {"him", 11, "obj"},
      {"to", 14, "mark"}, {"get", 11, "xcomp"}, {"away", 14, "advmod"}, {".", 2, "punct"}})},
      {"and_arg1_arg2"}});
  // The first sentence carries its own "and" split; the link between the
  // sentences is the next-sentence "also".
  cases.push_back({"(i) also", {tree({
      {"Kenny", 0, "root"}, {",", 3, "punct"}, {"revealed", 1, "acl"}, {"to", 6, "mark"}, {"be", 6, "cop"},
      {"alive", 3, "xcomp"}, {"and", 11, "cc"}, {"an", 11, "det"}, {"undercover", 11, "amod"},
      {"FBI", 11, "compound"}, {"agent", 6, "conj"}, {".", 1, "punct"}}),
      tree({
      {"He", 3, "nsubj"}, {"also", 3, "advmod"}, {"implies", 0, "root"}, {"that", 9, "mark"},
      {"Lampone", 9, "nsubj"}, {"is", 9, "cop"}, {"another", 9, "det"}, {"undercover", 9, "amod"},
      {"agent", 3, "ccomp"}, {".", 3, "punct"}})},
      {"and_arg1_arg2", "also_arg1_arg2"}});
  cases.push_back({"(j) still", {tree({
      {"She", 2, "nsubj"}, {"strikes", 0, "root"}, {"out", 2, "compound:prt"}, {"across", 8, "case"},
      {"the", 8, "det"}, {"dense", 8, "amod"}, {"sawgrass", 8, "compound"}, {"marshes", 2, "obl"},
      {"still", 10, "advmod"}, {"miles", 2, "dep"}, {"from", 12, "case"}, {"home", 10, "obl"}, {".", 2, "punct"}})},
      {"still_arg1_arg2"}});
  return cases;
}

/// "Because" splits 4 | 9 tokens, "and" splits 6 | 7: the more even "and" wins.
inline ParsedSentence two_marker_sentence() {
  return tree({{"Because", 3, "mark"}, {"Ann", 3, "nsubj"}, {"sang", 6, "advcl"}, {",", 6, "punct"},
               {"Tom", 6, "nsubj"}, {"smiled", 0, "root"}, {"and", 9, "cc"}, {"Bob", 9, "nsubj"},
               {"danced", 6, "conj"}, {"loudly", 9, "advmod"}, {"all", 12, "det"}, {"night", 9, "obl"},
               {".", 6, "punct"}});
}

/// Two marker-free sentences: one EDU each, linked by "unknown".
inline std::vector<ParsedSentence> unmarked_passage() {
  return {tree({{"Tom", 2, "nsubj"}, {"slept", 0, "root"}, {".", 2, "punct"}}),
          tree({{"Ann", 2, "nsubj"}, {"read", 0, "root"}, {"books", 2, "obj"}, {".", 2, "punct"}})};
}

}  // namespace latentstory::testing
