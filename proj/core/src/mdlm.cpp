#include "lzwdl/mdlm.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace lzwdl {

bool SparseCode::contains(AtomId id) const {
  return std::binary_search(active.begin(), active.end(), id);
}

std::vector<std::uint8_t> SparseCode::dense() const {
  std::vector<std::uint8_t> row(cols, 0);
  for (const AtomId id : active) row[id] = 1;
  return row;
}

namespace {

struct Candidate {
  std::size_t mismatches;
  std::size_t length;
  AtomId atom;
};

// Strict "a codes better than b": lower distortion (compared as exact
// fractions), then longer, then lower id.
bool better(const Candidate& a, const Candidate& b) {
  const std::size_t lhs = a.mismatches * b.length;
  const std::size_t rhs = b.mismatches * a.length;
  if (lhs != rhs) return lhs < rhs;
  if (a.length != b.length) return a.length > b.length;
  return a.atom < b.atom;
}

// Could any atom in a subtree whose path already has `mismatches` and whose
// deepest atom has length `max_len` beat `best`? The optimistic case is an
// atom of length max_len with no further mismatches.
bool may_beat(std::size_t mismatches, std::size_t max_len, const Candidate& best) {
  const std::size_t lhs = mismatches * best.length;
  const std::size_t rhs = best.mismatches * max_len;
  if (lhs != rhs) return lhs < rhs;
  return max_len >= best.length;
}

}  // namespace

MatchStep best_step(const Dictionary& dict, std::span<const TokenCode> codes,
                    std::size_t pos) {
  if (dict.empty()) throw std::invalid_argument("cannot encode with an empty dictionary");
  const std::size_t remaining = codes.size() - pos;

  // Any exact match has distortion 0; overhanging atoms never do. So the
  // longest exact match, if one exists, is the answer.
  if (const auto exact = dict.longest_match(codes, pos)) {
    return MatchStep{exact->atom, pos, 0, exact->length, 0.0};
  }

  const auto& trie = dict.trie();
  std::optional<Candidate> best;
  struct Frame {
    std::uint32_t node;
    std::size_t depth;
    std::size_t mismatches;
  };
  std::vector<Frame> stack{{Dictionary::kRoot, 0, 0}};
  while (!stack.empty()) {
    const Frame frame = stack.back();
    stack.pop_back();
    const auto& node = trie[frame.node];
    if (node.atom && frame.depth > 0) {
      const Candidate c{frame.mismatches, frame.depth, *node.atom};
      if (!best || better(c, *best)) best = c;
    }
    const std::size_t depth = frame.depth;
    const TokenCode here = depth < remaining ? codes[pos + depth] : kUnknownToken;
    // Push mismatching children first so the matching one is explored next.
    std::optional<Frame> matching;
    for (const auto& [code, child] : node.children) {
      const bool hit = here != kUnknownToken && code == here;
      const Frame next{child, depth + 1, frame.mismatches + (hit ? 0 : 1)};
      if (best && !may_beat(next.mismatches, trie[child].max_depth_below, *best)) {
        continue;
      }
      if (hit) {
        matching = next;
      } else {
        stack.push_back(next);
      }
    }
    if (matching) stack.push_back(*matching);
  }

  return MatchStep{best->atom, pos, best->mismatches, best->length,
                   static_cast<double>(best->mismatches) /
                       static_cast<double>(best->length)};
}

SparseCode encode_tokens(const Dictionary& dict, const TokenSeq& tokens) {
  if (dict.empty()) throw std::invalid_argument("cannot encode with an empty dictionary");
  SparseCode code;
  code.cols = dict.size();
  const auto codes = dict.encode_tokens(tokens);
  std::size_t pos = 0;
  while (pos < codes.size()) {
    const MatchStep step = best_step(dict, codes, pos);
    code.steps.push_back(step);
    code.active.push_back(step.atom_id);
    pos += std::min(step.atom_length, codes.size() - pos);
  }
  std::sort(code.active.begin(), code.active.end());
  code.active.erase(std::unique(code.active.begin(), code.active.end()),
                    code.active.end());
  return code;
}

SparseCode encode_sample(const Dictionary& dict, const Sample& sample) {
  return encode_tokens(dict, sample.tokens);
}

SparseMatrix encode_corpus(const Dictionary& dict, const LabeledCorpus& corpus,
                           unsigned threads) {
  if (dict.level() != corpus.level()) {
    throw std::invalid_argument("dictionary level does not match corpus level");
  }
  if (dict.empty()) throw std::invalid_argument("cannot encode with an empty dictionary");
  SparseMatrix matrix;
  matrix.cols = dict.size();
  matrix.rows.resize(corpus.size());

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, corpus.size()));
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      matrix.rows[i] = encode_sample(dict, corpus.sample(i)).active;
    }
  };
  if (threads <= 1) {
    work(0, corpus.size());
    return matrix;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (corpus.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(corpus.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(work, begin, end);
  }
  return matrix;
}

TokenSeq reconstruct(const Dictionary& dict, const SparseCode& code,
                     std::optional<std::size_t> original_length) {
  TokenSeq out;
  for (const auto& step : code.steps) {
    if (step.atom_id >= dict.size()) {
      throw std::out_of_range("step refers to atom " + std::to_string(step.atom_id) +
                              " but the dictionary has " +
                              std::to_string(dict.size()) + " atoms");
    }
    const auto& tokens = dict.atom(step.atom_id).tokens;
    out.insert(out.end(), tokens.begin(), tokens.end());
  }
  if (original_length && out.size() > *original_length) out.resize(*original_length);
  return out;
}

double distortion(const TokenSeq& original, const TokenSeq& reconstructed) {
  const std::size_t n = std::max(original.size(), reconstructed.size());
  if (n == 0) return 0.0;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= original.size() || i >= reconstructed.size() ||
        original[i] != reconstructed[i]) {
      ++mismatches;
    }
  }
  return static_cast<double>(mismatches) / static_cast<double>(n);
}

std::string matrix_to_json(const SparseMatrix& matrix) {
  nlohmann::ordered_json doc;
  doc["rows"] = matrix.rows;
  doc["cols"] = matrix.cols;
  return doc.dump();
}

SparseMatrix matrix_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    SparseMatrix m;
    m.cols = doc.at("cols").get<std::size_t>();
    m.rows = doc.at("rows").get<std::vector<std::vector<AtomId>>>();
    for (const auto& row : m.rows) {
      if (!std::is_sorted(row.begin(), row.end()) ||
          std::adjacent_find(row.begin(), row.end()) != row.end()) {
        throw DataError("matrix row support is not strictly increasing");
      }
      if (!row.empty() && row.back() >= m.cols) {
        throw DataError("matrix column index out of range");
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed matrix JSON: ") + e.what());
  }
}

void save_matrix(const SparseMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << matrix_to_json(matrix) << '\n';
}

SparseMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return matrix_from_json(buffer.str());
}

}  // namespace lzwdl
