#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "../oracles/oracles.hpp"
#include "lzwdl/mdlm.hpp"
#include "lzwdl/random.hpp"
#include "test_util.hpp"

using namespace lzwdl;

namespace {

Dictionary char_dict(const std::vector<std::string>& atoms, std::size_t cap = 8) {
  std::vector<Atom> out;
  for (const auto& a : atoms) out.push_back(Atom{tokenize(a, Level::Char)});
  return Dictionary(std::move(out), Level::Char, cap);
}

std::string join(const TokenSeq& t) { return join_tokens(t, Level::Char); }

}  // namespace

TEST_CASE("binary reconstruction example") {
  const auto d = char_dict({"1101", "0010", "1111", "0000"});
  const auto code = encode_tokens(d, tokenize("11010000", Level::Char));
  REQUIRE(code.steps.size() == 2);
  CHECK(code.steps[0] == MatchStep{0, 0, 0, 4, 0.0});
  CHECK(code.steps[1] == MatchStep{3, 4, 0, 4, 0.0});
  CHECK(code.dense() == std::vector<std::uint8_t>{1, 0, 0, 1});
  CHECK(join(reconstruct(d, code)) == "11010000");
}

TEST_CASE("sample equal to one atom") {
  const auto d = char_dict({"ab", "abc", "c"});
  const auto code = encode_tokens(d, tokenize("abc", Level::Char));
  REQUIRE(code.steps.size() == 1);
  CHECK(code.steps[0].atom_id == 1);
  CHECK(code.steps[0].distortion == 0.0);
}

TEST_CASE("mismatch rule") {
  const auto d = char_dict({"aa"});
  const auto code = encode_tokens(d, tokenize("ab", Level::Char));
  REQUIRE(code.steps.size() == 1);
  CHECK(code.steps[0].mismatches == 1);
  CHECK(code.steps[0].distortion == 0.5);
  CHECK(join(reconstruct(d, code)) == "aa");
  CHECK(distortion(tokenize("ab", Level::Char), reconstruct(d, code)) == 0.5);
}

TEST_CASE("overhang counts as mismatch") {
  // At "b", "bx" overhangs nothing but mismatches; "bcd" overhangs by one.
  const auto d = char_dict({"a", "bcd", "bx"});
  const auto code = encode_tokens(d, tokenize("abc", Level::Char));
  REQUIRE(code.steps.size() == 2);
  CHECK(code.steps[1].atom_id == 1);  // 1/3 beats 1/2
  CHECK(code.steps[1].mismatches == 1);
  CHECK(join(reconstruct(d, code, 3)) == "abc");
}

TEST_CASE("unseen tokens still produce a code") {
  const auto d = char_dict({"ab", "c"});
  const auto code = encode_tokens(d, tokenize("zzz", Level::Char));
  CHECK(code.steps.size() == 2);  // "ab" (ties on ratio 1, longer wins), then "ab" again
  CHECK_FALSE(code.active.empty());
}

TEST_CASE("empty input") {
  const auto d = char_dict({"a"});
  const auto code = encode_tokens(d, {});
  CHECK(code.steps.empty());
  CHECK(code.active.empty());
  CHECK(reconstruct(d, code).empty());
  CHECK(distortion({}, {}) == 0.0);
}

TEST_CASE("distortion") {
  const auto ab = tokenize("ab", Level::Char);
  CHECK(distortion(ab, ab) == 0.0);
  CHECK(distortion(ab, tokenize("cd", Level::Char)) == 1.0);
  CHECK(distortion(ab, tokenize("aa", Level::Char)) == 0.5);
}

TEST_CASE("matches the exhaustive per-position search") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> atoms;
    std::set<std::string> seen;
    const std::size_t n_atoms = 1 + rng.below(8);
    while (atoms.size() < n_atoms) {
      std::string a;
      const std::size_t len = 1 + rng.below(5);
      for (std::size_t j = 0; j < len; ++j) a += char('a' + rng.below(3));
      if (seen.insert(a).second) atoms.push_back(a);
    }
    std::string sample;
    const std::size_t len = rng.below(20);
    for (std::size_t j = 0; j < len; ++j) sample += char('a' + rng.below(4));

    const auto d = char_dict(atoms);
    const auto tokens = tokenize(sample, Level::Char);
    const auto code = encode_tokens(d, tokens);
    std::vector<oracle::Seq> ref_atoms;
    for (const auto& a : atoms) ref_atoms.push_back(tokenize(a, Level::Char));
    const auto ref = oracle::mdlm(ref_atoms, tokens);
    REQUIRE(code.steps.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(code.steps[i].atom_id == ref[i].atom);
      CHECK(code.steps[i].mismatches == ref[i].mismatches);
    }
  }
}

TEST_CASE("lossless on training samples with the full dictionary") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts, labels;
    const std::size_t n = 2 + rng.below(11);
    const std::size_t alphabet = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      std::string t;
      const std::size_t len = 1 + rng.below(12);
      for (std::size_t j = 0; j < len; ++j) t += char('a' + rng.below(alphabet));
      texts.push_back(t);
      labels.push_back(i % 2 ? "x" : "y");
    }
    const auto c = LabeledCorpus::from_texts(texts, labels, Level::Char);
    const auto d = build_dictionary(concatenate(c), Level::Char, 32);
    for (const auto& s : c.samples()) {
      const auto code = encode_sample(d, s);
      CHECK(reconstruct(d, code, s.tokens.size()) == s.tokens);
    }
  }
}

TEST_CASE("encode_corpus rows") {
  const auto d = char_dict({"1101", "0010", "1111", "0000"});
  const auto c = LabeledCorpus::from_texts({"11010000", "00101111", ""}, {"a", "b", "a"},
                                           Level::Char);
  // The empty-text row survives from_texts (only load_dataset drops empties).
  const auto m = encode_corpus(d, c, 1);
  CHECK(m.cols == 4);
  CHECK(m.rows[0] == std::vector<AtomId>{0, 3});
  CHECK(m.rows[1] == std::vector<AtomId>{1, 2});
  CHECK(m.rows[2].empty());
}

TEST_CASE("encode_corpus is row independent and thread-count independent") {
  Rng rng(8);
  std::vector<std::string> texts, labels;
  for (int i = 0; i < 64; ++i) {
    std::string t;
    for (std::size_t j = 0; j < 5 + rng.below(30); ++j) t += char('a' + rng.below(5));
    texts.push_back(t);
    labels.push_back(i % 2 ? "x" : "y");
  }
  const auto c = LabeledCorpus::from_texts(texts, labels, Level::Char);
  const auto d = build_dictionary(concatenate(c), Level::Char, 8);
  const auto one = encode_corpus(d, c, 1);
  CHECK(encode_corpus(d, c, 7) == one);

  std::vector<std::size_t> perm(c.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  const auto permuted = encode_corpus(d, c.subset(perm), 3);
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(permuted.rows[i] == one.rows[perm[i]]);

  const auto word = LabeledCorpus::from_texts({"a b", "c"}, {"x", "y"}, Level::Word);
  CHECK_THROWS(encode_corpus(d, word));
}

TEST_CASE("reconstruct rejects foreign ids") {
  const auto d = char_dict({"a"});
  SparseCode bad;
  bad.cols = 1;
  bad.steps.push_back(MatchStep{5, 0, 0, 1, 0.0});
  CHECK_THROWS(reconstruct(d, bad));
}

TEST_CASE("matrix json round trip") {
  TempDir dir;
  SparseMatrix m{5, {{0, 3}, {}, {1, 2, 4}}};
  save_matrix(m, dir.path / "m.json");
  CHECK(load_matrix(dir.path / "m.json") == m);
  CHECK_THROWS(matrix_from_json(R"({"cols": 2, "rows": [[0, 2]]})"));
  CHECK_THROWS(matrix_from_json(R"({"cols": 3, "rows": [[1, 0]]})"));
}
