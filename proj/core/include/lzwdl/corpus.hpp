#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lzwdl {

/// Tokenization granularity. Char level yields one token per Unicode scalar,
/// word level yields whitespace-delimited words with punctuation split off.
enum class Level { Char, Word };

std::string_view to_string(Level level);
Level parse_level(std::string_view text);

/// A token is the UTF-8 encoding of either one Unicode scalar (char level)
/// or a non-empty word/punctuation run (word level).
using Token = std::string;
using TokenSeq = std::vector<Token>;

using ClassId = std::uint32_t;

/// Thrown for malformed or unusable input data (bad CSV, non-UTF-8 bytes,
/// degenerate corpora). The CLI maps it to the data-error exit code.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sample {
  TokenSeq tokens;
  std::string raw_text;
};

/// Ordered labeled samples sharing one tokenization level.
///
/// Invariants (checked on construction): at least one sample, labels and
/// samples have equal length, at least two class names, every label indexes
/// into class_names.
class LabeledCorpus {
 public:
  LabeledCorpus(std::vector<Sample> samples, std::vector<ClassId> labels,
                std::vector<std::string> class_names, Level level);

  /// Builds a corpus by tokenizing raw texts. Labels are class-name strings
  /// mapped to dense ids in first-appearance order.
  static LabeledCorpus from_texts(const std::vector<std::string>& texts,
                                  const std::vector<std::string>& labels,
                                  Level level);

  std::size_t size() const { return samples_.size(); }
  std::size_t num_classes() const { return class_names_.size(); }
  Level level() const { return level_; }

  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<ClassId>& labels() const { return labels_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  const Sample& sample(std::size_t i) const { return samples_.at(i); }
  ClassId label(std::size_t i) const { return labels_.at(i); }

  /// Returns the sub-corpus made of the given indices, in that order. The
  /// class-name table is kept so label ids stay comparable across subsets.
  LabeledCorpus subset(const std::vector<std::size_t>& indices) const;

  /// Sample counts per class id.
  std::vector<std::size_t> class_counts() const;

 private:
  std::vector<Sample> samples_;
  std::vector<ClassId> labels_;
  std::vector<std::string> class_names_;
  Level level_;
};

/// Splits text into tokens. Nothing is lowercased or dropped except the
/// whitespace separating words at word level.
TokenSeq tokenize(std::string_view text, Level level);

/// Joins tokens back into text content. Char level concatenates; word level
/// also concatenates, so the result equals the raw text with whitespace
/// removed.
std::string join_tokens(const TokenSeq& tokens, Level level);

/// Concatenates every sample's tokens in corpus order, with no separators.
TokenSeq concatenate(const LabeledCorpus& corpus);

/// Reads an RFC-4180 CSV file (UTF-8, header row). Rows whose text cell is
/// empty are skipped.
LabeledCorpus load_dataset(const std::filesystem::path& path,
                           std::string_view text_column,
                           std::string_view label_column, Level level);

struct SplitResult {
  LabeledCorpus train;
  LabeledCorpus test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Stratified, seeded train/test partition. Each class contributes
/// round(n_c * test_fraction) samples to the test side, clamped to [1, n_c-1].
SplitResult split(const LabeledCorpus& corpus, double test_fraction,
                  std::uint64_t seed);

/// Stratified subsample of at most max_samples rows (all rows when the
/// corpus is already small enough). Class proportions are preserved up to
/// rounding and every class keeps at least one sample.
LabeledCorpus stratified_subsample(const LabeledCorpus& corpus,
                                   std::size_t max_samples, std::uint64_t seed);

/// JSON-lines snapshot: one {"text": ..., "label": ...} object per line.
void write_jsonl(const LabeledCorpus& corpus, const std::filesystem::path& path);
LabeledCorpus read_jsonl(const std::filesystem::path& path, Level level);

namespace utf8 {

/// Splits a UTF-8 string into one string per scalar. Throws DataError on
/// malformed input.
std::vector<std::string> scalars(std::string_view text);

/// True when the bytes are well-formed UTF-8.
bool valid(std::string_view text);

}  // namespace utf8

namespace csv {

/// Parses RFC-4180 records: quoted fields may contain commas, doubled quotes
/// and line breaks. CRLF and LF line endings are both accepted.
std::vector<std::vector<std::string>> parse(std::string_view content);

}  // namespace csv

}  // namespace lzwdl
