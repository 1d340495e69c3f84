#pragma once

// Synthetic datasets shared by unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "generators.hpp"
#include "hsd/corpus.hpp"
#include "hsd/training.hpp"
#include "hsd/unicode.hpp"

namespace hsd::test {

// Two classes drawn from disjoint vocabularies plus shared filler; label
// alternates 0, 1, 0, ...
inline std::vector<TextSample> separable(std::size_t n, std::uint64_t seed) {
  Gen g(seed);
  const std::vector<std::string> a{"alpha", "bravo", "charlie", "delta", "echo", "foxtrot"};
  const std::vector<std::string> b{"kilo", "lima", "mike", "november", "oscar", "papa"};
  const std::vector<std::string> shared{"the", "of", "and", "is"};
  std::vector<TextSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    std::vector<std::string> words;
    for (int k = 0; k < 3; ++k) words.push_back((label ? b : a)[g.index(6)]);
    for (int k = 0; k < 3; ++k) words.push_back(shared[g.index(4)]);
    std::shuffle(words.begin(), words.end(), g.engine());
    TextSample s;
    s.id = "s" + std::to_string(i);
    s.text_a = unicode::join(words);
    s.label = label;
    out.push_back(s);
  }
  return out;
}

// The same data as a flat CSV: label 0 is HOF/OFFN, label 1 is NOT/NONE.
inline std::string separable_csv(std::size_t n, std::uint64_t seed) {
  std::string out = "text_id,text,task_1,task_2\n";
  for (const auto& s : separable(n, seed)) {
    out += s.id + "," + s.text_a + "," + (*s.label ? "NOT,NONE" : "HOF,OFFN") + "\n";
  }
  return out;
}

// Up to max_trees trees of up to 3 comments with up to 2 replies each.
inline std::vector<Thread> random_threads(Gen& g, std::size_t max_trees = 4) {
  std::vector<Thread> trees;
  for (std::size_t k = g.between(0, max_trees); k > 0; --k) {
    const std::string p = "t" + std::to_string(trees.size());
    std::vector<ThreadNode> ns{{p, g.tweet(), {}, {}, 0}};
    for (std::size_t c = g.between(0, 3); c > 0; --c) {
      const std::string cid = p + "c" + std::to_string(c);
      ns.push_back({cid, g.tweet(), {}, p, 1});
      for (std::size_t r = g.between(0, 2); r > 0; --r) ns.push_back({cid + "r" + std::to_string(r), g.tweet(), {}, cid, 2});
    }
    trees.push_back(Thread::build(ns));
  }
  return trees;
}

}  // namespace hsd::test
