#include "lzwdl/lzw.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lzwdl {

namespace {

std::uint64_t edge_key(std::uint32_t node, TokenCode code) {
  return (static_cast<std::uint64_t>(node) << 32) | code;
}

}  // namespace

std::size_t default_max_atom_len(Level level) {
  return level == Level::Char ? kDefaultMaxAtomLenChar : kDefaultMaxAtomLenWord;
}

Dictionary::Dictionary(std::vector<Atom> atoms, Level level,
                       std::size_t max_atom_len, std::vector<AtomScore> scores)
    : atoms_(std::move(atoms)),
      level_(level),
      max_atom_len_(max_atom_len),
      scores_(std::move(scores)) {
  if (max_atom_len_ < 1) throw std::invalid_argument("max_atom_len must be >= 1");
  if (!scores_.empty() && scores_.size() != atoms_.size()) {
    throw std::invalid_argument("score table size does not match atom count");
  }

  codes_offset_.reserve(atoms_.size() + 1);
  codes_offset_.push_back(0);
  trie_.emplace_back();
  for (std::size_t id = 0; id < atoms_.size(); ++id) {
    const auto& tokens = atoms_[id].tokens;
    if (tokens.empty()) throw std::invalid_argument("atom with no tokens");
    if (tokens.size() > max_atom_len_) {
      throw std::invalid_argument("atom " + std::to_string(id) +
                                  " exceeds max_atom_len");
    }
    std::uint32_t node = kRoot;
    for (const auto& token : tokens) {
      if (token.empty()) throw std::invalid_argument("empty token in atom");
      auto [tok_it, new_token] =
          token_codes_.try_emplace(token, static_cast<TokenCode>(token_codes_.size()));
      (void)new_token;
      const TokenCode code = tok_it->second;
      codes_flat_.push_back(code);
      auto [edge_it, new_edge] =
          edges_.try_emplace(edge_key(node, code), static_cast<std::uint32_t>(trie_.size()));
      if (new_edge) {
        trie_[node].children.emplace_back(code, edge_it->second);
        trie_.emplace_back();
      }
      node = edge_it->second;
    }
    if (trie_[node].atom.has_value()) {
      throw std::invalid_argument("duplicate atom at ids " +
                                  std::to_string(*trie_[node].atom) + " and " +
                                  std::to_string(id));
    }
    trie_[node].atom = static_cast<AtomId>(id);
    codes_offset_.push_back(codes_flat_.size());
  }

  // Children are created after their parent, so a reverse sweep sees every
  // subtree before its root.
  std::vector<std::uint32_t> depth(trie_.size(), 0);
  for (std::uint32_t n = 0; n < trie_.size(); ++n) {
    for (const auto& [code, child] : trie_[n].children) depth[child] = depth[n] + 1;
  }
  for (std::size_t n = trie_.size(); n-- > 0;) {
    auto& node = trie_[n];
    std::sort(node.children.begin(), node.children.end());
    node.max_depth_below = node.atom ? depth[n] : 0;
    for (const auto& [code, child] : node.children) {
      node.max_depth_below = std::max(node.max_depth_below, trie_[child].max_depth_below);
    }
  }
}

std::optional<std::uint32_t> Dictionary::child(std::uint32_t node,
                                               TokenCode code) const {
  if (code == kUnknownToken) return std::nullopt;
  const auto it = edges_.find(edge_key(node, code));
  if (it == edges_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenCode> Dictionary::encode_tokens(const TokenSeq& tokens) const {
  std::vector<TokenCode> codes;
  codes.reserve(tokens.size());
  for (const auto& t : tokens) {
    const auto it = token_codes_.find(t);
    codes.push_back(it == token_codes_.end() ? kUnknownToken : it->second);
  }
  return codes;
}

std::span<const TokenCode> Dictionary::atom_codes(AtomId id) const {
  const std::size_t begin = codes_offset_.at(id);
  const std::size_t end = codes_offset_.at(id + 1);
  return std::span<const TokenCode>(codes_flat_).subspan(begin, end - begin);
}

std::optional<AtomId> Dictionary::find(const TokenSeq& tokens) const {
  std::uint32_t node = kRoot;
  for (const auto& t : tokens) {
    const auto it = token_codes_.find(t);
    if (it == token_codes_.end()) return std::nullopt;
    const auto next = child(node, it->second);
    if (!next) return std::nullopt;
    node = *next;
  }
  return tokens.empty() ? std::nullopt : trie_[node].atom;
}

std::optional<Match> Dictionary::longest_match(std::span<const TokenCode> codes,
                                               std::size_t pos) const {
  std::optional<Match> best;
  std::uint32_t node = kRoot;
  for (std::size_t i = pos; i < codes.size(); ++i) {
    const auto next = child(node, codes[i]);
    if (!next) break;
    node = *next;
    if (trie_[node].atom) best = Match{*trie_[node].atom, i - pos + 1};
  }
  return best;
}

std::string Dictionary::render(AtomId id) const {
  const auto& tokens = atom(id).tokens;
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (level_ == Level::Word && i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

bool Dictionary::operator==(const Dictionary& other) const {
  if (level_ != other.level_ || max_atom_len_ != other.max_atom_len_ ||
      atoms_.size() != other.atoms_.size() ||
      scores_.size() != other.scores_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].tokens != other.atoms_[i].tokens) return false;
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (scores_[i].class_counts != other.scores_[i].class_counts ||
        scores_[i].dispower != other.scores_[i].dispower) {
      return false;
    }
  }
  return true;
}

Dictionary build_dictionary(const TokenSeq& seq, Level level,
                            std::size_t max_atom_len) {
  if (seq.empty()) throw std::invalid_argument("cannot build a dictionary from an empty sequence");
  if (max_atom_len < 2) throw std::invalid_argument("max_atom_len must be >= 2");

  std::unordered_map<std::string_view, TokenCode> codes;
  std::vector<Atom> atoms;
  std::vector<TokenCode> seq_codes;
  seq_codes.reserve(seq.size());
  for (const auto& token : seq) {
    if (token.empty()) throw std::invalid_argument("empty token in sequence");
    auto [it, inserted] = codes.try_emplace(token, static_cast<TokenCode>(atoms.size()));
    if (inserted) atoms.push_back(Atom{{token}});
    seq_codes.push_back(it->second);
  }

  // A phrase is identified by its atom id; extending phrase p by token c is
  // looked up under (p, c). Single tokens have atom id == token code.
  std::unordered_map<std::uint64_t, AtomId> phrases;
  phrases.reserve(seq.size());
  AtomId current = seq_codes.front();
  std::size_t current_len = 1;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const TokenCode c = seq_codes[i];
    const auto key = edge_key(current, c);
    if (const auto it = phrases.find(key); it != phrases.end()) {
      current = it->second;
      ++current_len;
      continue;
    }
    if (current_len + 1 <= max_atom_len) {
      Atom extended = atoms[current];
      extended.tokens.push_back(seq[i]);
      phrases.emplace(key, static_cast<AtomId>(atoms.size()));
      atoms.push_back(std::move(extended));
    }
    current = c;
    current_len = 1;
  }
  return Dictionary(std::move(atoms), level, max_atom_len);
}

std::optional<Match> longest_match(const Dictionary& dict, const TokenSeq& seq,
                                   std::size_t pos) {
  if (pos >= seq.size()) {
    throw std::out_of_range("longest_match position " + std::to_string(pos) +
                            " beyond sequence of length " + std::to_string(seq.size()));
  }
  // Only the tokens that can take part in a match need encoding.
  const std::size_t end = std::min(seq.size(), pos + dict.max_atom_len());
  const TokenSeq window(seq.begin() + static_cast<std::ptrdiff_t>(pos),
                        seq.begin() + static_cast<std::ptrdiff_t>(end));
  return dict.longest_match(dict.encode_tokens(window), 0);
}

std::string dictionary_to_json(const Dictionary& dict) {
  nlohmann::ordered_json doc;
  doc["level"] = std::string(to_string(dict.level()));
  doc["max_atom_len"] = dict.max_atom_len();
  auto& atoms = doc["atoms"] = nlohmann::ordered_json::array();
  for (std::size_t id = 0; id < dict.size(); ++id) {
    nlohmann::ordered_json entry;
    entry["id"] = id;
    std::string joined;
    const auto& tokens = dict.atom(static_cast<AtomId>(id)).tokens;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (dict.level() == Level::Word && t > 0) joined += kWordSeparator;
      joined += tokens[t];
    }
    entry["tokens"] = joined;
    if (dict.has_scores()) {
      entry["class_counts"] = dict.scores()[id].class_counts;
      entry["dispower"] = dict.scores()[id].dispower;
    }
    atoms.push_back(std::move(entry));
  }
  return doc.dump(1);
}

Dictionary dictionary_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const Level level = parse_level(doc.at("level").get<std::string>());
    const auto max_len = doc.at("max_atom_len").get<std::size_t>();
    std::vector<Atom> atoms;
    std::vector<AtomScore> scores;
    const auto& entries = doc.at("atoms");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& entry = entries[i];
      if (entry.at("id").get<std::size_t>() != i) {
        throw DataError("dictionary atom ids are not contiguous from 0");
      }
      const auto joined = entry.at("tokens").get<std::string>();
      Atom atom;
      if (level == Level::Char) {
        atom.tokens = utf8::scalars(joined);
      } else {
        std::size_t start = 0;
        while (true) {
          const std::size_t sep = joined.find(kWordSeparator, start);
          atom.tokens.push_back(joined.substr(start, sep - start));
          if (sep == std::string::npos) break;
          start = sep + kWordSeparator.size();
        }
      }
      atoms.push_back(std::move(atom));
      if (entry.contains("class_counts")) {
        scores.push_back(AtomScore{
            entry.at("class_counts").get<std::vector<std::uint64_t>>(),
            entry.at("dispower").get<double>()});
      }
    }
    if (!scores.empty() && scores.size() != atoms.size()) {
      throw DataError("dictionary has statistics for only some atoms");
    }
    return Dictionary(std::move(atoms), level, max_len, std::move(scores));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dictionary JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid dictionary: ") + e.what());
  }
}

void save_dictionary(const Dictionary& dict, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << dictionary_to_json(dict) << '\n';
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dictionary file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dictionary_from_json(buffer.str());
}

}  // namespace lzwdl
