#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "../oracles/oracles.hpp"
#include "lzwdl/lzw.hpp"
#include "lzwdl/random.hpp"
#include "test_util.hpp"

using namespace lzwdl;

namespace {

std::vector<std::string> rendered(const Dictionary& d) {
  std::vector<std::string> out;
  for (AtomId id = 0; id < d.size(); ++id) out.push_back(d.render(id));
  return out;
}

TokenSeq random_seq(Rng& rng, std::size_t len, std::size_t alphabet) {
  TokenSeq s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(std::string(1, char('a' + rng.below(alphabet))));
  return s;
}

}  // namespace

TEST_CASE("hand-traced char dictionary") {
  const auto d = build_dictionary(tokenize("abcabcabc", Level::Char), Level::Char, 32);
  CHECK(rendered(d) ==
        std::vector<std::string>{"a", "b", "c", "ab", "bc", "ca", "abc", "cab"});
}

TEST_CASE("hand-traced word dictionary") {
  const auto d =
      build_dictionary(tokenize("the cat sat the cat ran", Level::Word), Level::Word, 8);
  CHECK(rendered(d) == std::vector<std::string>{"the", "cat", "sat", "ran", "the cat",
                                                "cat sat", "sat the", "the cat ran"});
}

TEST_CASE("length cap stops growth") {
  const auto d = build_dictionary(TokenSeq(40, "a"), Level::Char, 3);
  CHECK(rendered(d) == std::vector<std::string>{"a", "aa", "aaa"});
  CHECK_THROWS(build_dictionary(TokenSeq{"a"}, Level::Char, 1));
  CHECK_THROWS(build_dictionary(TokenSeq{}, Level::Char, 4));
}

TEST_CASE("longest match") {
  const auto d = build_dictionary(tokenize("abcabcabc", Level::Char), Level::Char, 32);
  auto m = longest_match(d, tokenize("abcx", Level::Char), 0);
  REQUIRE(m);
  CHECK(d.render(m->atom) == "abc");
  CHECK(m->length == 3);
  CHECK_FALSE(longest_match(d, tokenize("abcx", Level::Char), 3));
  m = longest_match(d, tokenize("abca", Level::Char), 3);
  REQUIRE(m);
  CHECK(d.render(m->atom) == "a");
  CHECK(m->length == 1);
  CHECK_THROWS_AS(longest_match(d, tokenize("ab", Level::Char), 2), std::out_of_range);
}

TEST_CASE("matches the reference scan on random sequences") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t alphabet = 1 + rng.below(5);
    const std::size_t cap = 2 + rng.below(6);
    const auto seq = random_seq(rng, 1 + rng.below(120), alphabet);
    const auto d = build_dictionary(seq, Level::Char, cap);
    const auto ref = oracle::lzw_atoms(seq, cap);
    REQUIRE(d.size() == ref.size());
    for (AtomId id = 0; id < d.size(); ++id) CHECK(d.atom(id).tokens == ref[id]);
  }
}

TEST_CASE("dictionary invariants") {
  Rng rng(3);
  const auto seq = random_seq(rng, 500, 4);
  const auto d = build_dictionary(seq, Level::Char, 6);
  std::set<TokenSeq> seen;
  for (AtomId id = 0; id < d.size(); ++id) {
    const auto& t = d.atom(id).tokens;
    CHECK(seen.insert(t).second);
    CHECK(t.size() <= 6);
    CHECK(d.find(t) == id);
    // Every atom occurs somewhere in the scanned sequence.
    CHECK(oracle::occurs_in(t, seq));
    // Every proper prefix is also an atom.
    if (t.size() > 1) CHECK(d.find(TokenSeq(t.begin(), t.end() - 1)).has_value());
  }
}

TEST_CASE("constructor validation") {
  CHECK_THROWS(Dictionary({Atom{{"a"}}, Atom{{"a"}}}, Level::Char, 4));
  CHECK_THROWS(Dictionary({Atom{{}}}, Level::Char, 4));
  CHECK_THROWS(Dictionary({Atom{{"a", "b", "c"}}}, Level::Char, 2));
}

TEST_CASE("json round trip at both levels") {
  TempDir dir;
  for (const Level level : {Level::Char, Level::Word}) {
    const auto text = std::string("one two, three! one two four \"q\" \t tab");
    const auto d = build_dictionary(tokenize(text, level), level, 5);
    save_dictionary(d, dir.path / "d.json");
    const auto back = load_dictionary(dir.path / "d.json");
    CHECK(back == d);
    CHECK(back.level() == level);
    CHECK(back.max_atom_len() == 5);
  }
  CHECK_THROWS(dictionary_from_json("{\"level\": \"char\"}"));
  CHECK_THROWS(dictionary_from_json("not json"));
}

TEST_CASE("word atoms render with spaces") {
  const auto d = build_dictionary(tokenize("a b a b", Level::Word), Level::Word, 8);
  CHECK(d.render(*d.find(TokenSeq{"a", "b"})) == "a b");
}
