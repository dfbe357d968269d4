#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lzwdl/corpus.hpp"
#include "lzwdl/lzw.hpp"

namespace lzwdl {

/// One greedy coding step: atom_id covers the sample from offset onwards.
/// distortion = mismatches / atom length, where positions past the end of
/// the sample count as mismatches.
struct MatchStep {
  AtomId atom_id = 0;
  std::size_t offset = 0;
  std::size_t mismatches = 0;
  std::size_t atom_length = 0;
  double distortion = 0.0;

  bool operator==(const MatchStep&) const = default;
};

/// Binary indicator row over the dictionary, stored as its sorted support,
/// plus the ordered step list it was derived from.
struct SparseCode {
  std::size_t cols = 0;
  std::vector<AtomId> active;
  std::vector<MatchStep> steps;

  bool contains(AtomId id) const;
  std::vector<std::uint8_t> dense() const;

  bool operator==(const SparseCode&) const = default;
};

/// N x cols binary matrix in row-support form.
struct SparseMatrix {
  std::size_t cols = 0;
  std::vector<std::vector<AtomId>> rows;

  std::size_t num_rows() const { return rows.size(); }

  bool operator==(const SparseMatrix&) const = default;
};

/// Minimum-distortion-longest-match coding of one token sequence. Each step
/// picks the atom with the smallest distortion against the remaining suffix
/// (ties: longer atom, then lower id) and consumes min(atom length, suffix
/// length) tokens.
SparseCode encode_sample(const Dictionary& dict, const Sample& sample);
SparseCode encode_tokens(const Dictionary& dict, const TokenSeq& tokens);

/// Row-wise encode_sample. Rows are independent and are coded in parallel
/// when threads > 1 (0 picks the hardware concurrency).
SparseMatrix encode_corpus(const Dictionary& dict, const LabeledCorpus& corpus,
                           unsigned threads = 0);

/// Concatenates the atoms of the step list. When original_length is given
/// the result is trimmed to it (only the last atom can overhang).
TokenSeq reconstruct(const Dictionary& dict, const SparseCode& code,
                     std::optional<std::size_t> original_length = std::nullopt);

/// Position-wise mismatch count over the longer of the two sequences,
/// divided by that length. Zero for two empty sequences.
double distortion(const TokenSeq& original, const TokenSeq& reconstructed);

/// Best step at one position, exposed for tests and benchmarks.
MatchStep best_step(const Dictionary& dict, std::span<const TokenCode> codes,
                    std::size_t pos);

/// {"rows": [[j, ...], ...], "cols": k}
std::string matrix_to_json(const SparseMatrix& matrix);
SparseMatrix matrix_from_json(std::string_view text);
void save_matrix(const SparseMatrix& matrix, const std::filesystem::path& path);
SparseMatrix load_matrix(const std::filesystem::path& path);

}  // namespace lzwdl
