#include "lzwdl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "lzwdl/random.hpp"

namespace lzwdl {

std::string_view to_string(Level level) {
  return level == Level::Char ? "char" : "word";
}

Level parse_level(std::string_view text) {
  if (text == "char") return Level::Char;
  if (text == "word") return Level::Word;
  throw std::invalid_argument("unknown level '" + std::string(text) +
                              "' (expected char or word)");
}

namespace utf8 {
namespace {

// Length of the scalar starting at text[pos], or 0 when malformed.
std::size_t scalar_length(std::string_view text, std::size_t pos, char32_t* out) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(text[i]);
  };
  const unsigned char lead = byte(pos);
  std::size_t len = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    len = 1;
    cp = lead;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    return 0;
  }
  if (pos + len > text.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char b = byte(pos + i);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong forms, surrogates and out-of-range values.
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return 0;
  }
  if (out != nullptr) *out = cp;
  return len;
}

}  // namespace

std::vector<std::string> scalars(std::string_view text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t len = scalar_length(text, pos, nullptr);
    if (len == 0) {
      throw DataError("invalid UTF-8 at byte offset " + std::to_string(pos));
    }
    out.emplace_back(text.substr(pos, len));
    pos += len;
  }
  return out;
}

bool valid(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t len = scalar_length(text, pos, nullptr);
    if (len == 0) return false;
    pos += len;
  }
  return true;
}

}  // namespace utf8

namespace {

bool is_space(char32_t cp) {
  if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D)) return true;
  return cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

// ASCII punctuation and symbols, plus the common Unicode punctuation blocks.
// Letters, digits and marks outside these ranges stay inside words.
bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  return (cp >= 0xA1 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
         (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
         (cp >= 0xFF5B && cp <= 0xFF65);
}

char32_t decode(std::string_view scalar) {
  const auto b = [&](std::size_t i) {
    return static_cast<char32_t>(static_cast<unsigned char>(scalar[i]));
  };
  switch (scalar.size()) {
    case 1: return b(0);
    case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
    case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
    default:
      return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) |
             ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
  }
}

}  // namespace

TokenSeq tokenize(std::string_view text, Level level) {
  std::vector<std::string> chars = utf8::scalars(text);
  if (level == Level::Char) return chars;

  TokenSeq tokens;
  std::string word;
  const auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  for (auto& scalar : chars) {
    const char32_t cp = decode(scalar);
    if (is_space(cp)) {
      flush();
    } else if (is_punct(cp)) {
      flush();
      tokens.push_back(std::move(scalar));
    } else {
      word += scalar;
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const TokenSeq& tokens, Level /*level*/) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

TokenSeq concatenate(const LabeledCorpus& corpus) {
  std::size_t total = 0;
  for (const auto& s : corpus.samples()) total += s.tokens.size();
  TokenSeq seq;
  seq.reserve(total);
  for (const auto& s : corpus.samples()) {
    seq.insert(seq.end(), s.tokens.begin(), s.tokens.end());
  }
  return seq;
}

LabeledCorpus::LabeledCorpus(std::vector<Sample> samples,
                             std::vector<ClassId> labels,
                             std::vector<std::string> class_names, Level level)
    : samples_(std::move(samples)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)),
      level_(level) {
  if (samples_.empty()) throw DataError("corpus has no samples");
  if (samples_.size() != labels_.size()) {
    throw DataError("corpus has " + std::to_string(samples_.size()) +
                    " samples but " + std::to_string(labels_.size()) + " labels");
  }
  if (class_names_.size() < 2) {
    throw DataError("corpus needs at least two classes, got " +
                    std::to_string(class_names_.size()));
  }
  for (const ClassId label : labels_) {
    if (label >= class_names_.size()) {
      throw DataError("label id " + std::to_string(label) + " out of range");
    }
  }
}

LabeledCorpus LabeledCorpus::from_texts(const std::vector<std::string>& texts,
                                        const std::vector<std::string>& labels,
                                        Level level) {
  if (texts.size() != labels.size()) {
    throw DataError("text and label columns differ in length");
  }
  std::vector<Sample> samples;
  std::vector<ClassId> ids;
  std::vector<std::string> names;
  std::unordered_map<std::string, ClassId> lookup;
  samples.reserve(texts.size());
  ids.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto [it, inserted] =
        lookup.try_emplace(labels[i], static_cast<ClassId>(names.size()));
    if (inserted) names.push_back(labels[i]);
    samples.push_back(Sample{tokenize(texts[i], level), texts[i]});
    ids.push_back(it->second);
  }
  if (!samples.empty() && names.size() < 2) {
    throw DataError("single-class corpus: every row has label '" + names.front() +
                    "'");
  }
  return LabeledCorpus(std::move(samples), std::move(ids), std::move(names), level);
}

LabeledCorpus LabeledCorpus::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Sample> samples;
  std::vector<ClassId> labels;
  samples.reserve(indices.size());
  labels.reserve(indices.size());
  for (const std::size_t i : indices) {
    samples.push_back(samples_.at(i));
    labels.push_back(labels_.at(i));
  }
  return LabeledCorpus(std::move(samples), std::move(labels), class_names_, level_);
}

std::vector<std::size_t> LabeledCorpus::class_counts() const {
  std::vector<std::size_t> counts(class_names_.size(), 0);
  for (const ClassId label : labels_) ++counts[label];
  return counts;
}

namespace csv {

std::vector<std::vector<std::string>> parse(std::string_view content) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;

  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_record = [&] {
    end_field();
    // A lone empty field is a blank line.
    if (!(record.size() == 1 && record.front().empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };

  while (i < content.size()) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw DataError("unterminated quoted field at end of CSV");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

}  // namespace csv

LabeledCorpus load_dataset(const std::filesystem::path& path,
                           std::string_view text_column,
                           std::string_view label_column, Level level) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string content = buffer.str();
  if (content.starts_with("\xEF\xBB\xBF")) content.erase(0, 3);
  if (!utf8::valid(content)) {
    throw DataError("dataset file " + path.string() + " is not valid UTF-8");
  }

  const auto records = csv::parse(content);
  if (records.empty()) throw DataError("dataset file has no header row");
  const auto& header = records.front();
  const auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("missing column '" + std::string(name) + "' in " +
                      path.string());
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t text_idx = column(text_column);
  const std::size_t label_idx = column(label_column);

  std::vector<std::string> texts;
  std::vector<std::string> labels;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    if (row.size() <= std::max(text_idx, label_idx)) {
      throw DataError("row " + std::to_string(r + 1) + " has only " +
                      std::to_string(row.size()) + " fields");
    }
    if (row[text_idx].empty()) continue;
    texts.push_back(row[text_idx]);
    labels.push_back(row[label_idx]);
  }
  if (texts.empty()) throw DataError("no usable rows in " + path.string());
  return LabeledCorpus::from_texts(texts, labels, level);
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const LabeledCorpus& corpus) {
  std::vector<std::vector<std::size_t>> by_class(corpus.num_classes());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_class[corpus.label(i)].push_back(i);
  }
  return by_class;
}

}  // namespace

SplitResult split(const LabeledCorpus& corpus, double test_fraction,
                  std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  auto by_class = indices_by_class(corpus);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2) {
      throw DataError("class '" + corpus.class_names()[c] +
                      "' has fewer than 2 samples; cannot split");
    }
    rng.shuffle(members);
    auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(members.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    test_idx.insert(test_idx.end(), members.begin(),
                    members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(),
                     members.begin() + static_cast<std::ptrdiff_t>(n_test),
                     members.end());
  }
  // Corpus order is kept inside each side.
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return SplitResult{corpus.subset(train_idx), corpus.subset(test_idx), train_idx,
                     test_idx};
}

LabeledCorpus stratified_subsample(const LabeledCorpus& corpus,
                                   std::size_t max_samples, std::uint64_t seed) {
  if (max_samples >= corpus.size()) return corpus;
  if (max_samples < corpus.num_classes()) {
    throw std::invalid_argument("subsample size smaller than the class count");
  }
  Rng rng(seed);
  auto by_class = indices_by_class(corpus);
  const double ratio =
      static_cast<double>(max_samples) / static_cast<double>(corpus.size());
  std::vector<std::size_t> keep;
  for (auto& members : by_class) {
    if (members.empty()) continue;
    rng.shuffle(members);
    auto n = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) * ratio));
    n = std::clamp<std::size_t>(n, 1, members.size());
    keep.insert(keep.end(), members.begin(),
                members.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(keep.begin(), keep.end());
  return corpus.subset(keep);
}

void write_jsonl(const LabeledCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    nlohmann::ordered_json row;
    row["text"] = corpus.sample(i).raw_text;
    row["label"] = corpus.class_names()[corpus.label(i)];
    out << row.dump() << '\n';
  }
}

LabeledCorpus read_jsonl(const std::filesystem::path& path, Level level) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> texts;
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto row = nlohmann::json::parse(line);
      texts.push_back(row.at("text").get<std::string>());
      labels.push_back(row.at("label").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed JSON line in " + path.string() + ": " + e.what());
    }
  }
  if (texts.empty()) throw DataError("no rows in " + path.string());
  return LabeledCorpus::from_texts(texts, labels, level);
}

}  // namespace lzwdl
