#include "lzwdl/dpm.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace lzwdl {

std::uint64_t AtomStats::total() const {
  return std::accumulate(class_counts.begin(), class_counts.end(), std::uint64_t{0});
}

std::vector<AtomStats> count_occurrences(const Dictionary& dict,
                                         const LabeledCorpus& train) {
  if (dict.level() != train.level()) {
    throw std::invalid_argument("dictionary level '" +
                                std::string(to_string(dict.level())) +
                                "' does not match corpus level '" +
                                std::string(to_string(train.level())) + "'");
  }
  const std::size_t num_classes = train.num_classes();
  std::vector<std::uint64_t> counts(dict.size() * num_classes, 0);
  // last_seen[a] == i + 1 once atom a has been counted for sample i.
  std::vector<std::size_t> last_seen(dict.size(), 0);
  const auto& trie = dict.trie();

  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto codes = dict.encode_tokens(train.sample(i).tokens);
    const ClassId label = train.label(i);
    for (std::size_t start = 0; start < codes.size(); ++start) {
      std::uint32_t node = Dictionary::kRoot;
      for (std::size_t p = start; p < codes.size(); ++p) {
        const auto next = dict.child(node, codes[p]);
        if (!next) break;
        node = *next;
        if (const auto atom = trie[node].atom; atom && last_seen[*atom] != i + 1) {
          last_seen[*atom] = i + 1;
          ++counts[*atom * num_classes + label];
        }
      }
    }
  }

  std::vector<AtomStats> stats(dict.size());
  for (std::size_t a = 0; a < dict.size(); ++a) {
    auto& s = stats[a];
    s.atom_id = static_cast<AtomId>(a);
    s.class_counts.assign(counts.begin() + static_cast<std::ptrdiff_t>(a * num_classes),
                          counts.begin() + static_cast<std::ptrdiff_t>((a + 1) * num_classes));
    s.dispower = dispower(s.class_counts, num_classes);
  }
  return stats;
}

std::vector<double> occurrence_rates(std::span<const std::uint64_t> class_counts) {
  const auto total =
      std::accumulate(class_counts.begin(), class_counts.end(), std::uint64_t{0});
  if (total == 0) {
    throw std::domain_error("occurrence rates undefined for an atom with zero count");
  }
  std::vector<double> rates;
  rates.reserve(class_counts.size());
  for (const auto c : class_counts) {
    rates.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return rates;
}

double dispower(std::span<const std::uint64_t> class_counts, std::size_t num_classes) {
  if (class_counts.size() != num_classes) {
    throw std::invalid_argument("count vector length differs from class count");
  }
  const auto total =
      std::accumulate(class_counts.begin(), class_counts.end(), std::uint64_t{0});
  if (total == 0) return 0.0;
  // total * [log2 M - H(p)] rewritten as sum_m c_m log2(c_m M / total), which
  // is exactly zero for uniform counts.
  const auto denom = static_cast<double>(total);
  const auto m = static_cast<double>(num_classes);
  // Summing in sorted order makes the result independent of class labeling.
  std::vector<std::uint64_t> sorted(class_counts.begin(), class_counts.end());
  std::sort(sorted.begin(), sorted.end());
  double value = 0.0;
  for (const auto c : sorted) {
    if (c == 0) continue;
    const auto cd = static_cast<double>(c);
    value += cd * std::log2(cd * m / denom);
  }
  return std::max(0.0, value);
}

Dictionary score_dictionary(const Dictionary& dict, const LabeledCorpus& train) {
  auto stats = count_occurrences(dict, train);
  std::vector<AtomScore> scores;
  scores.reserve(stats.size());
  for (auto& s : stats) scores.push_back(AtomScore{std::move(s.class_counts), s.dispower});
  return Dictionary(dict.atoms(), dict.level(), dict.max_atom_len(), std::move(scores));
}

std::vector<AtomId> rank_by_dispower(const Dictionary& scored) {
  if (!scored.has_scores()) {
    throw std::invalid_argument("dictionary carries no dispower scores");
  }
  const auto& scores = scored.scores();
  std::vector<std::uint64_t> totals(scores.size());
  for (std::size_t a = 0; a < scores.size(); ++a) {
    totals[a] = std::accumulate(scores[a].class_counts.begin(),
                                scores[a].class_counts.end(), std::uint64_t{0});
  }
  std::vector<AtomId> order(scored.size());
  std::iota(order.begin(), order.end(), AtomId{0});
  std::sort(order.begin(), order.end(), [&](AtomId a, AtomId b) {
    if (scores[a].dispower != scores[b].dispower) {
      return scores[a].dispower > scores[b].dispower;
    }
    if (totals[a] != totals[b]) return totals[a] > totals[b];
    return a < b;
  });
  return order;
}

std::vector<AtomId> top_k_ids(const Dictionary& scored, std::size_t k) {
  if (k < 1 || k > scored.size()) {
    throw std::out_of_range("k = " + std::to_string(k) + " outside [1, " +
                            std::to_string(scored.size()) + "]");
  }
  auto order = rank_by_dispower(scored);
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

Dictionary select_top_k(const Dictionary& scored, std::size_t k) {
  const auto keep = top_k_ids(scored, k);
  std::vector<Atom> atoms;
  std::vector<AtomScore> scores;
  atoms.reserve(k);
  scores.reserve(k);
  for (const AtomId id : keep) {
    atoms.push_back(scored.atom(id));
    scores.push_back(scored.scores()[id]);
  }
  return Dictionary(std::move(atoms), scored.level(), scored.max_atom_len(),
                    std::move(scores));
}

Dictionary update_dictionary(const Dictionary& dict, const LabeledCorpus& train,
                             std::size_t k) {
  if (k < 1 || k > dict.size()) {
    throw std::out_of_range("k = " + std::to_string(k) + " outside [1, " +
                            std::to_string(dict.size()) + "]");
  }
  return select_top_k(score_dictionary(dict, train), k);
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_dispower_csv(const Dictionary& scored,
                        const std::vector<std::string>& class_names,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "atom";
  for (const auto& name : class_names) out << "," << csv_escape("count_" + name);
  out << ",dispower\n";
  char buf[32];
  for (const AtomId id : rank_by_dispower(scored)) {
    out << csv_escape(scored.render(id));
    for (const auto c : scored.scores()[id].class_counts) out << ',' << c;
    std::snprintf(buf, sizeof buf, "%.9g", scored.scores()[id].dispower);
    out << ',' << buf << '\n';
  }
}

}  // namespace lzwdl
