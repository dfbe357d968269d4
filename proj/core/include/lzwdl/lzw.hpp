#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lzwdl/corpus.hpp"

namespace lzwdl {

using AtomId = std::uint32_t;

/// Dictionary-local integer code for a token. Tokens the dictionary has never
/// seen map to kUnknownToken, which compares unequal to every atom token.
using TokenCode = std::uint32_t;
inline constexpr TokenCode kUnknownToken = 0xFFFFFFFFu;

inline constexpr std::size_t kDefaultMaxAtomLenChar = 32;
inline constexpr std::size_t kDefaultMaxAtomLenWord = 8;

std::size_t default_max_atom_len(Level level);

struct Atom {
  TokenSeq tokens;
  std::size_t length() const { return tokens.size(); }
};

/// Per-atom discriminative statistics attached by the dpm stage.
struct AtomScore {
  std::vector<std::uint64_t> class_counts;
  double dispower = 0.0;
};

struct Match {
  AtomId atom = 0;
  std::size_t length = 0;
};

/// Ordered set of distinct atoms. Ids are positions in the atom list.
///
/// Besides the atoms, a dictionary owns a token table and a token trie over
/// all atoms. Every lookup (longest match, occurrence counting, MDLM search)
/// walks the trie on token codes produced by encode_tokens().
class Dictionary {
 public:
  struct TrieNode {
    // Sorted by token code.
    std::vector<std::pair<TokenCode, std::uint32_t>> children;
    std::optional<AtomId> atom;
    // Longest atom in this subtree (including this node).
    std::uint32_t max_depth_below = 0;
  };

  Dictionary(std::vector<Atom> atoms, Level level, std::size_t max_atom_len,
             std::vector<AtomScore> scores = {});

  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  Level level() const { return level_; }
  std::size_t max_atom_len() const { return max_atom_len_; }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& atom(AtomId id) const { return atoms_.at(id); }

  bool has_scores() const { return !scores_.empty(); }
  const std::vector<AtomScore>& scores() const { return scores_; }

  std::optional<AtomId> find(const TokenSeq& tokens) const;

  /// Maps tokens to this dictionary's codes (kUnknownToken when unseen).
  std::vector<TokenCode> encode_tokens(const TokenSeq& tokens) const;

  std::span<const TokenCode> atom_codes(AtomId id) const;

  const std::vector<TrieNode>& trie() const { return trie_; }
  static constexpr std::uint32_t kRoot = 0;
  std::optional<std::uint32_t> child(std::uint32_t node, TokenCode code) const;

  /// Longest atom matching codes starting at pos.
  std::optional<Match> longest_match(std::span<const TokenCode> codes,
                                     std::size_t pos) const;

  /// Display form of an atom: char level concatenates, word level joins
  /// with single spaces.
  std::string render(AtomId id) const;

  bool operator==(const Dictionary& other) const;

 private:
  std::vector<Atom> atoms_;
  Level level_;
  std::size_t max_atom_len_;
  std::vector<AtomScore> scores_;

  std::unordered_map<std::string, TokenCode> token_codes_;
  std::vector<TokenCode> codes_flat_;
  std::vector<std::size_t> codes_offset_;
  std::vector<TrieNode> trie_;
  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
};

/// LZW scan over a token sequence. The dictionary starts with every distinct
/// token (first-seen order), then grows by one phrase per mismatch. Phrases
/// longer than max_atom_len are not inserted, but the scan still restarts
/// from the current token.
Dictionary build_dictionary(const TokenSeq& seq, Level level,
                            std::size_t max_atom_len);

/// Longest atom matching seq at pos, or nullopt when seq[pos] itself is not
/// an atom. Throws std::out_of_range when pos >= seq.size().
std::optional<Match> longest_match(const Dictionary& dict, const TokenSeq& seq,
                                   std::size_t pos);

/// Separator used when a word-level atom is stored as one string.
inline constexpr std::string_view kWordSeparator = "\x1F";

/// Dictionary file: {level, max_atom_len, atoms: [{id, tokens, class_counts?,
/// dispower?}]}.
void save_dictionary(const Dictionary& dict, const std::filesystem::path& path);
Dictionary load_dictionary(const std::filesystem::path& path);
std::string dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(std::string_view text);

}  // namespace lzwdl
