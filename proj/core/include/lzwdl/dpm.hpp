#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lzwdl/corpus.hpp"
#include "lzwdl/lzw.hpp"

namespace lzwdl {

/// Class-occurrence statistics of one atom. class_counts[m] is the number of
/// class-m samples containing the atom at least once.
struct AtomStats {
  AtomId atom_id = 0;
  std::vector<std::uint64_t> class_counts;
  double dispower = 0.0;

  std::uint64_t total() const;
};

/// Sample-level containment counts for every atom of the dictionary. A sample
/// that contains an atom several times contributes one.
std::vector<AtomStats> count_occurrences(const Dictionary& dict,
                                         const LabeledCorpus& train);

/// p_m = c_m / sum(c). Throws std::domain_error when every count is zero.
std::vector<double> occurrence_rates(std::span<const std::uint64_t> class_counts);

/// Discriminative power: total count times the KL divergence (bits) of the
/// class-occurrence distribution from uniform over num_classes classes.
/// Zero when the atom was never observed.
double dispower(std::span<const std::uint64_t> class_counts, std::size_t num_classes);

/// Returns a copy of dict with class counts and dispower attached to every
/// atom.
Dictionary score_dictionary(const Dictionary& dict, const LabeledCorpus& train);

/// Keeps the k highest-dispower atoms of a scored dictionary. Ties go to the
/// larger total count, then the lower atom id. Survivors keep their relative
/// order and are renumbered from 0.
Dictionary select_top_k(const Dictionary& scored, std::size_t k);

/// Original atom ids of the k survivors, in id order.
std::vector<AtomId> top_k_ids(const Dictionary& scored, std::size_t k);

/// Scores dict against the training corpus and prunes it to k atoms.
Dictionary update_dictionary(const Dictionary& dict, const LabeledCorpus& train,
                             std::size_t k);

/// Atom ids of a scored dictionary sorted by descending dispower (with the
/// selection tie-break).
std::vector<AtomId> rank_by_dispower(const Dictionary& scored);

/// CSV dump (atom, count_<class>..., dispower), best atoms first.
void write_dispower_csv(const Dictionary& scored,
                        const std::vector<std::string>& class_names,
                        const std::filesystem::path& path);

}  // namespace lzwdl
