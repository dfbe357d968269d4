#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lzwdl/corpus.hpp"
#include "lzwdl/lzw.hpp"
#include "lzwdl/mdlm.hpp"

namespace lzwdl {

/// Probability vector over a finite support. Validated on construction:
/// entries non-negative and summing to 1 within 1e-9.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<double> probabilities);
  static DiscreteDistribution from_counts(std::span<const std::uint64_t> counts);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probabilities() const { return p_; }

 private:
  std::vector<double> p_;
};

/// Dense joint distribution p(x, y), rows indexed by x.
class JointDistribution {
 public:
  JointDistribution(std::size_t rows, std::size_t cols, std::vector<double> values);
  static JointDistribution from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t x, std::size_t y) const { return p_[x * cols_ + y]; }
  const std::vector<double>& values() const { return p_; }

  DiscreteDistribution marginal_x() const;
  DiscreteDistribution marginal_y() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> p_;
};

/// Shannon entropy in bits, with 0 log 0 = 0.
double entropy(const DiscreteDistribution& p);
double entropy(std::span<const double> p);

/// I(X;Y) = H(X) + H(Y) - H(X,Y) in bits. Clamped at 0 against rounding.
double mutual_information(const JointDistribution& joint);

/// Plug-in I(X;T) over the empirical supports: distinct raw documents for X,
/// distinct indicator rows for T.
double estimate_ixt(const LabeledCorpus& train, const SparseMatrix& codes);

/// Plug-in I(Y;T) from the empirical joint of (label, indicator row).
double estimate_iyt(std::span<const ClassId> labels, const SparseMatrix& codes);

/// Empirical joint of (distinct document, label) for a corpus.
JointDistribution empirical_joint(const LabeledCorpus& corpus);

/// Gaussian-kernel plug-in alternative for I(X;T) when each sample has a
/// continuous embedding: p(x) and p(x|t) are kernel density estimates
/// (Silverman bandwidth), p(t) is counted. Returns bits.
double estimate_ixt_kde(const std::vector<std::vector<double>>& embeddings,
                        const SparseMatrix& codes);

struct InfoPoint {
  std::size_t k = 0;
  double ixt = 0.0;
  double iyt = 0.0;
};

using InfoTrajectory = std::vector<InfoPoint>;

/// Codes a corpus against a dictionary; encode_corpus by default.
using Coder = std::function<SparseMatrix(const Dictionary&, const LabeledCorpus&)>;

/// For every k: prune the scored dictionary to k atoms, code the training
/// corpus and estimate (I(X;T), I(Y;T)). dict_full may be scored or not.
InfoTrajectory trajectory(const LabeledCorpus& train, const Dictionary& dict_full,
                          const std::vector<std::size_t>& k_values,
                          const Coder& coder = {});

/// {2, 4, 8, ..., 2^ceil(log2 n)} with the last entry clamped to n.
std::vector<std::size_t> default_k_sweep(std::size_t dictionary_size);

struct IbOptions {
  std::vector<double> betas;  // empty: 40 log-spaced values in [0.1, 100]
  std::size_t max_t_cardinality = 32;
  std::size_t restarts = 8;
  double tol = 1e-9;
  std::size_t max_iterations = 5000;
  std::uint64_t seed = 0;
  std::size_t max_x_support = 4096;
  // Extra solves at geometric midpoints of betas whose solutions are more
  // than refine_gap bits of I(X;T) apart.
  // The beta range is also extended upwards (x4 per step, up to max_beta)
  // while the largest solution stays short of H(X) by more than refine_gap.
  std::size_t refinements = 40;
  double refine_gap = 0.02;
  double max_beta = 1e7;
};

struct IbPoint {
  double beta = 0.0;
  double ixt = 0.0;
  double iyt = 0.0;
};

/// Piecewise-linear function through points sorted by x. Duplicate x keep
/// the highest y; outside the point range the function is held flat.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(std::vector<std::pair<double, double>> points);
  double operator()(double x) const;
  const std::vector<std::pair<double, double>>& points() const { return points_; }

 private:
  std::vector<std::pair<double, double>> points_;
};

/// Non-decreasing concave frontier in the information plane. `solved` keeps
/// the raw per-beta solutions (plus the full-information anchor, beta = inf);
/// `curve` interpolates the upper concave envelope, starting at the origin
/// and flat past its last vertex.
struct IbBoundary {
  std::vector<IbPoint> solved;
  PiecewiseLinear curve;
  double mutual_information = 0.0;

  double operator()(double ixt) const { return curve(ixt); }
};

/// Thrown when the joint exceeds the dense-solver size guard.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Self-consistent iterative IB on a discrete joint, one solve per beta
/// (best of `restarts` seeded starts), followed by the upper concave
/// envelope. Rows of the joint with identical conditionals p(y|x) are merged
/// first; the frontier depends only on that sufficient statistic.
IbBoundary ib_boundary(const JointDistribution& joint, const IbOptions& options = {});

/// I(X;T) and I(Y;T) in bits for a stochastic encoder p(t|x), given as a
/// row-major |X| x |T| matrix over the rows of the joint.
struct EncoderInfo {
  double ixt = 0.0;
  double iyt = 0.0;
};
EncoderInfo encoder_information(const JointDistribution& joint,
                                std::span<const double> encoder, std::size_t t_card);

/// Upper concave envelope of a point set, clipped to be non-decreasing and
/// anchored at the origin.
std::vector<std::pair<double, double>> concave_envelope(
    std::vector<std::pair<double, double>> points);

enum class AreaMethod { Trapezoid, MonteCarlo };

struct IparReport {
  double a = 0.0;
  double b = 0.0;
  double area1 = 0.0;
  double area2 = 0.0;
  double ipar = 0.0;
  AreaMethod method = AreaMethod::Trapezoid;
  std::optional<double> mc_stderr;
};

/// Area ratio between the region under the boundary and above the trajectory
/// (I) and the region under the trajectory (II), both over the trajectory's
/// I(X;T) span [a, b]. The trajectory is clipped at the boundary from above.
IparReport ipar(const PiecewiseLinear& boundary, const InfoTrajectory& traj,
                AreaMethod method,
                std::size_t mc_samples = 100000, std::uint64_t seed = 0);
IparReport ipar(const IbBoundary& boundary, const InfoTrajectory& traj,
                AreaMethod method, std::size_t mc_samples = 100000,
                std::uint64_t seed = 0);

struct GapReport {
  std::vector<double> gaps;  // f_IB(ixt) - iyt per trajectory point
  double min_gap = 0.0;
  bool feasible = true;      // every gap >= -tolerance
};

GapReport constrained_gap_check(const IbBoundary& boundary, const InfoTrajectory& traj,
                                double tolerance = 1e-6);

void write_trajectory_csv(const InfoTrajectory& traj, const std::filesystem::path& path);
InfoTrajectory read_trajectory_csv(const std::filesystem::path& path);
void write_boundary_csv(const IbBoundary& boundary, const std::filesystem::path& path);
IbBoundary read_boundary_csv(const std::filesystem::path& path);
IbBoundary boundary_from_points(std::vector<IbPoint> solved);
std::string ipar_to_json(const IparReport& report);

}  // namespace lzwdl
