#include "lzwdl/infotheory.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "lzwdl/dpm.hpp"
#include "lzwdl/random.hpp"

namespace lzwdl {

namespace {

constexpr double kMassTolerance = 1e-9;
constexpr double kLn2 = 0.69314718055994530942;

void check_probabilities(std::span<const double> p) {
  double sum = 0.0;
  for (const double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("probabilities must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kMassTolerance) {
    throw std::invalid_argument("probabilities sum to " + std::to_string(sum) +
                                ", expected 1");
  }
}

double plogp_bits(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

// Entropy in bits of an empirical distribution given by integer counts.
template <typename Map>
double count_entropy(const Map& counts, double n) {
  double h = 0.0;
  for (const auto& [key, c] : counts) h += plogp_bits(static_cast<double>(c) / n);
  return h;
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> probabilities)
    : p_(std::move(probabilities)) {
  if (p_.empty()) throw std::invalid_argument("distribution has empty support");
  check_probabilities(p_);
}

DiscreteDistribution DiscreteDistribution::from_counts(
    std::span<const std::uint64_t> counts) {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) throw std::invalid_argument("counts are all zero");
  std::vector<double> p;
  p.reserve(counts.size());
  for (const auto c : counts) {
    p.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return DiscreteDistribution(std::move(p));
}

JointDistribution::JointDistribution(std::size_t rows, std::size_t cols,
                                     std::vector<double> values)
    : rows_(rows), cols_(cols), p_(std::move(values)) {
  if (rows_ == 0 || cols_ == 0 || p_.size() != rows_ * cols_) {
    throw std::invalid_argument("joint distribution shape mismatch");
  }
  check_probabilities(p_);
}

JointDistribution JointDistribution::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("joint distribution has no rows");
  std::vector<double> flat;
  for (const auto& row : rows) {
    if (row.size() != rows.front().size()) {
      throw std::invalid_argument("ragged joint distribution");
    }
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return JointDistribution(rows.size(), rows.front().size(), std::move(flat));
}

DiscreteDistribution JointDistribution::marginal_x() const {
  std::vector<double> p(rows_, 0.0);
  for (std::size_t x = 0; x < rows_; ++x) {
    for (std::size_t y = 0; y < cols_; ++y) p[x] += (*this)(x, y);
  }
  return DiscreteDistribution(std::move(p));
}

DiscreteDistribution JointDistribution::marginal_y() const {
  std::vector<double> p(cols_, 0.0);
  for (std::size_t x = 0; x < rows_; ++x) {
    for (std::size_t y = 0; y < cols_; ++y) p[y] += (*this)(x, y);
  }
  return DiscreteDistribution(std::move(p));
}

double entropy(std::span<const double> p) {
  check_probabilities(p);
  double h = 0.0;
  for (const double v : p) h += plogp_bits(v);
  return h;
}

double entropy(const DiscreteDistribution& p) { return entropy(p.probabilities()); }

double mutual_information(const JointDistribution& joint) {
  const double hx = entropy(joint.marginal_x());
  const double hy = entropy(joint.marginal_y());
  const double hxy = entropy(joint.values());
  return std::max(0.0, hx + hy - hxy);
}

double estimate_ixt(const LabeledCorpus& train, const SparseMatrix& codes) {
  if (train.size() != codes.num_rows()) {
    throw std::invalid_argument("corpus has " + std::to_string(train.size()) +
                                " samples but the code matrix has " +
                                std::to_string(codes.num_rows()) + " rows");
  }
  std::unordered_map<std::string_view, std::size_t> doc_ids;
  std::map<std::vector<AtomId>, std::size_t> row_ids;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_counts;
  std::map<std::size_t, std::size_t> x_counts;
  std::map<std::size_t, std::size_t> t_counts;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto x = doc_ids.try_emplace(train.sample(i).raw_text, doc_ids.size()).first->second;
    const auto t = row_ids.try_emplace(codes.rows[i], row_ids.size()).first->second;
    ++x_counts[x];
    ++t_counts[t];
    ++pair_counts[{x, t}];
  }
  const auto n = static_cast<double>(train.size());
  return std::max(0.0, count_entropy(x_counts, n) + count_entropy(t_counts, n) -
                           count_entropy(pair_counts, n));
}

double estimate_iyt(std::span<const ClassId> labels, const SparseMatrix& codes) {
  if (labels.size() != codes.num_rows()) {
    throw std::invalid_argument("label count differs from code matrix rows");
  }
  if (labels.empty()) throw std::invalid_argument("no samples");
  std::map<std::vector<AtomId>, std::size_t> row_ids;
  std::map<std::pair<std::size_t, ClassId>, std::size_t> pair_counts;
  std::map<ClassId, std::size_t> y_counts;
  std::map<std::size_t, std::size_t> t_counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = row_ids.try_emplace(codes.rows[i], row_ids.size()).first->second;
    ++y_counts[labels[i]];
    ++t_counts[t];
    ++pair_counts[{t, labels[i]}];
  }
  const auto n = static_cast<double>(labels.size());
  return std::max(0.0, count_entropy(y_counts, n) + count_entropy(t_counts, n) -
                           count_entropy(pair_counts, n));
}

JointDistribution empirical_joint(const LabeledCorpus& corpus) {
  std::unordered_map<std::string_view, std::size_t> doc_ids;
  std::vector<std::vector<std::size_t>> counts;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto [it, inserted] =
        doc_ids.try_emplace(corpus.sample(i).raw_text, doc_ids.size());
    if (inserted) counts.emplace_back(corpus.num_classes(), 0);
    ++counts[it->second][corpus.label(i)];
  }
  const auto n = static_cast<double>(corpus.size());
  std::vector<double> flat;
  flat.reserve(counts.size() * corpus.num_classes());
  for (const auto& row : counts) {
    for (const auto c : row) flat.push_back(static_cast<double>(c) / n);
  }
  // Renormalize so rounding never trips the mass check.
  const double sum = std::accumulate(flat.begin(), flat.end(), 0.0);
  for (auto& v : flat) v /= sum;
  return JointDistribution(counts.size(), corpus.num_classes(), std::move(flat));
}

double estimate_ixt_kde(const std::vector<std::vector<double>>& embeddings,
                        const SparseMatrix& codes) {
  const std::size_t n = embeddings.size();
  if (n != codes.num_rows()) {
    throw std::invalid_argument("embedding count differs from code matrix rows");
  }
  if (n < 2) throw std::invalid_argument("kernel estimate needs at least two samples");
  const std::size_t d = embeddings.front().size();
  if (d == 0) throw std::invalid_argument("embeddings have zero dimension");
  for (const auto& e : embeddings) {
    if (e.size() != d) throw std::invalid_argument("ragged embeddings");
  }

  // Silverman's rule with the mean per-dimension standard deviation.
  double sigma = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (const auto& e : embeddings) mean += e[k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& e : embeddings) var += (e[k] - mean) * (e[k] - mean);
    sigma += std::sqrt(var / static_cast<double>(n - 1));
  }
  sigma /= static_cast<double>(d);
  if (sigma <= 0.0) return 0.0;
  const double dd = static_cast<double>(d);
  const double h = sigma * std::pow(4.0 / (dd + 2.0), 1.0 / (dd + 4.0)) *
                   std::pow(static_cast<double>(n), -1.0 / (dd + 4.0));

  std::map<std::vector<AtomId>, std::size_t> row_ids;
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = row_ids.try_emplace(codes.rows[i], row_ids.size()).first->second;
  }
  std::vector<double> t_size(row_ids.size(), 0.0);
  for (const auto ti : t) t_size[ti] += 1.0;

  // Kernel normalization cancels in log p(x|t) - log p(x).
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double all = 0.0;
    double same = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double dist2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = embeddings[i][k] - embeddings[j][k];
        dist2 += diff * diff;
      }
      const double kv = std::exp(-0.5 * dist2 / (h * h));
      all += kv;
      if (t[j] == t[i]) same += kv;
    }
    total += std::log2((same / t_size[t[i]]) / (all / static_cast<double>(n)));
  }
  return std::max(0.0, total / static_cast<double>(n));
}

InfoTrajectory trajectory(const LabeledCorpus& train, const Dictionary& dict_full,
                          const std::vector<std::size_t>& k_values, const Coder& coder) {
  if (!std::is_sorted(k_values.begin(), k_values.end())) {
    throw std::invalid_argument("k values must be sorted ascending");
  }
  const Dictionary scored =
      dict_full.has_scores() ? dict_full : score_dictionary(dict_full, train);
  const Coder code = coder ? coder : Coder([](const Dictionary& d, const LabeledCorpus& c) {
    return encode_corpus(d, c);
  });
  InfoTrajectory traj;
  traj.reserve(k_values.size());
  for (const std::size_t k : k_values) {
    const auto pruned = select_top_k(scored, k);
    const auto codes = code(pruned, train);
    traj.push_back(InfoPoint{k, estimate_ixt(train, codes),
                             estimate_iyt(train.labels(), codes)});
  }
  return traj;
}

std::vector<std::size_t> default_k_sweep(std::size_t dictionary_size) {
  if (dictionary_size == 0) throw std::invalid_argument("empty dictionary");
  if (dictionary_size < 2) return {dictionary_size};
  std::vector<std::size_t> ks;
  for (std::size_t k = 2;; k *= 2) {
    ks.push_back(std::min(k, dictionary_size));
    if (k >= dictionary_size) break;
  }
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

// ---------------------------------------------------------------------------
// Information bottleneck

PiecewiseLinear::PiecewiseLinear(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw std::invalid_argument("piecewise-linear curve needs points");
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  });
  for (const auto& p : points) {
    if (!points_.empty() && points_.back().first == p.first) continue;
    points_.push_back(p);
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (points_.empty()) throw std::logic_error("empty piecewise-linear curve");
  if (x <= points_.front().first) return points_.front().second;
  if (x >= points_.back().first) return points_.back().second;
  const auto it = std::upper_bound(
      points_.begin(), points_.end(), x,
      [](double value, const auto& p) { return value < p.first; });
  const auto& [x1, y1] = *it;
  const auto& [x0, y0] = *(it - 1);
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

std::vector<std::pair<double, double>> concave_envelope(
    std::vector<std::pair<double, double>> points) {
  points.emplace_back(0.0, 0.0);
  for (auto& [x, y] : points) {
    x = std::max(0.0, x);
    y = std::max(0.0, y);
  }
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  });
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : points) {
    if (!hull.empty() && hull.back().first == p.first) continue;
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull.back();
      const double cross =
          (a.first - o.first) * (p.second - o.second) - (a.second - o.second) * (p.first - o.first);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  // Past the highest vertex the frontier is flat.
  const auto top = std::max_element(hull.begin(), hull.end(), [](const auto& a, const auto& b) {
    return a.second < b.second;
  });
  hull.erase(top + 1, hull.end());
  return hull;
}

IbBoundary boundary_from_points(std::vector<IbPoint> solved) {
  IbBoundary boundary;
  std::vector<std::pair<double, double>> pts;
  pts.reserve(solved.size());
  for (const auto& p : solved) {
    pts.emplace_back(p.ixt, p.iyt);
    boundary.mutual_information = std::max(boundary.mutual_information, p.iyt);
  }
  boundary.curve = PiecewiseLinear(concave_envelope(std::move(pts)));
  boundary.solved = std::move(solved);
  return boundary;
}

EncoderInfo encoder_information(const JointDistribution& joint,
                                std::span<const double> encoder, std::size_t t_card) {
  const std::size_t nx = joint.rows();
  const std::size_t ny = joint.cols();
  if (encoder.size() != nx * t_card) throw std::invalid_argument("encoder shape mismatch");
  const auto px = joint.marginal_x();
  const auto py = joint.marginal_y();
  std::vector<double> pt(t_card, 0.0);
  std::vector<double> pty(t_card * ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t t = 0; t < t_card; ++t) {
      const double e = encoder[x * t_card + t];
      pt[t] += px[x] * e;
      for (std::size_t y = 0; y < ny; ++y) pty[t * ny + y] += joint(x, y) * e;
    }
  }
  EncoderInfo info;
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t t = 0; t < t_card; ++t) {
      const double e = encoder[x * t_card + t];
      if (e > 0.0 && px[x] > 0.0) info.ixt += px[x] * e * std::log2(e / pt[t]);
    }
  }
  for (std::size_t t = 0; t < t_card; ++t) {
    for (std::size_t y = 0; y < ny; ++y) {
      const double p = pty[t * ny + y];
      if (p > 0.0) info.iyt += p * std::log2(p / (pt[t] * py[y]));
    }
  }
  info.ixt = std::max(0.0, info.ixt);
  info.iyt = std::max(0.0, info.iyt);
  return info;
}

namespace {

// p(x) and p(y|x) after merging rows with equal conditionals.
struct ReducedJoint {
  std::vector<double> px;
  std::vector<std::vector<double>> py_x;
  std::vector<double> py;
};

ReducedJoint reduce(const JointDistribution& joint) {
  const std::size_t ny = joint.cols();
  std::map<std::vector<long long>, std::size_t> index;
  ReducedJoint r;
  r.py.assign(ny, 0.0);
  for (std::size_t x = 0; x < joint.rows(); ++x) {
    double mass = 0.0;
    for (std::size_t y = 0; y < ny; ++y) mass += joint(x, y);
    if (mass <= 0.0) continue;
    std::vector<double> cond(ny);
    std::vector<long long> key(ny);
    for (std::size_t y = 0; y < ny; ++y) {
      cond[y] = joint(x, y) / mass;
      key[y] = std::llround(cond[y] * 1e12);
      r.py[y] += joint(x, y);
    }
    const auto [it, inserted] = index.try_emplace(key, r.px.size());
    if (inserted) {
      r.px.push_back(mass);
      r.py_x.push_back(std::move(cond));
    } else {
      r.px[it->second] += mass;
    }
  }
  return r;
}

struct IbSolution {
  double objective = std::numeric_limits<double>::infinity();  // nats
  double ixt = 0.0;  // nats
  double iyt = 0.0;  // nats
  std::vector<double> encoder;
};

class IbSolver {
 public:
  IbSolver(const ReducedJoint& joint, std::size_t t_card)
      : j_(joint), nx_(joint.px.size()), ny_(joint.py.size()), nt_(t_card) {}

  IbSolution solve(double beta, std::vector<double> enc, double tol,
                   std::size_t max_iterations) const {
    std::vector<double> pt(nt_);
    std::vector<double> pyt(nt_ * ny_);
    IbSolution sol;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
      marginals(enc, pt, pyt);
      sol = evaluate(beta, enc, pt, pyt);
      if (std::abs(previous - sol.objective) < tol) break;
      previous = sol.objective;
      update(beta, enc, pt, pyt);
    }
    sol.encoder = std::move(enc);
    return sol;
  }

 private:
  void marginals(const std::vector<double>& enc, std::vector<double>& pt,
                 std::vector<double>& pyt) const {
    std::fill(pt.begin(), pt.end(), 0.0);
    std::fill(pyt.begin(), pyt.end(), 0.0);
    for (std::size_t x = 0; x < nx_; ++x) {
      for (std::size_t t = 0; t < nt_; ++t) {
        const double w = j_.px[x] * enc[x * nt_ + t];
        if (w == 0.0) continue;
        pt[t] += w;
        for (std::size_t y = 0; y < ny_; ++y) pyt[t * ny_ + y] += w * j_.py_x[x][y];
      }
    }
    for (std::size_t t = 0; t < nt_; ++t) {
      if (pt[t] <= 0.0) continue;
      for (std::size_t y = 0; y < ny_; ++y) pyt[t * ny_ + y] /= pt[t];
    }
  }

  IbSolution evaluate(double beta, const std::vector<double>& enc,
                      const std::vector<double>& pt, const std::vector<double>& pyt) const {
    IbSolution s;
    for (std::size_t x = 0; x < nx_; ++x) {
      for (std::size_t t = 0; t < nt_; ++t) {
        const double e = enc[x * nt_ + t];
        if (e > 0.0) s.ixt += j_.px[x] * e * std::log(e / pt[t]);
      }
    }
    for (std::size_t t = 0; t < nt_; ++t) {
      if (pt[t] <= 0.0) continue;
      for (std::size_t y = 0; y < ny_; ++y) {
        const double p = pyt[t * ny_ + y];
        if (p > 0.0) s.iyt += pt[t] * p * std::log(p / j_.py[y]);
      }
    }
    s.ixt = std::max(0.0, s.ixt);
    s.iyt = std::max(0.0, s.iyt);
    s.objective = s.ixt - beta * s.iyt;
    return s;
  }

  void update(double beta, std::vector<double>& enc, const std::vector<double>& pt,
              const std::vector<double>& pyt) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> logits(nt_);
    for (std::size_t x = 0; x < nx_; ++x) {
      double top = kNegInf;
      for (std::size_t t = 0; t < nt_; ++t) {
        if (pt[t] <= 0.0) {
          logits[t] = kNegInf;
          continue;
        }
        double kl = 0.0;
        for (std::size_t y = 0; y < ny_; ++y) {
          const double p = j_.py_x[x][y];
          if (p <= 0.0) continue;
          const double q = pyt[t * ny_ + y];
          if (q <= 0.0) {
            kl = std::numeric_limits<double>::infinity();
            break;
          }
          kl += p * std::log(p / q);
        }
        logits[t] = std::isinf(kl) ? kNegInf : std::log(pt[t]) - beta * kl;
        top = std::max(top, logits[t]);
      }
      double sum = 0.0;
      for (std::size_t t = 0; t < nt_; ++t) {
        const double v = logits[t] == kNegInf ? 0.0 : std::exp(logits[t] - top);
        enc[x * nt_ + t] = v;
        sum += v;
      }
      for (std::size_t t = 0; t < nt_; ++t) enc[x * nt_ + t] /= sum;
    }
  }

  const ReducedJoint& j_;
  std::size_t nx_;
  std::size_t ny_;
  std::size_t nt_;
};

std::vector<double> default_betas() {
  std::vector<double> betas(40);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    betas[i] = 0.1 * std::pow(1000.0, static_cast<double>(i) / 39.0);
  }
  return betas;
}

}  // namespace

IbBoundary ib_boundary(const JointDistribution& joint, const IbOptions& options) {
  if (joint.rows() > options.max_x_support) {
    throw GuardError("joint has |X| = " + std::to_string(joint.rows()) +
                     " rows, above the dense solver limit of " +
                     std::to_string(options.max_x_support) +
                     "; subsample the corpus (e.g. --max-samples)");
  }
  if (options.restarts == 0) throw std::invalid_argument("restarts must be >= 1");
  const ReducedJoint reduced = reduce(joint);
  const std::size_t nx = reduced.px.size();
  const std::size_t nt = std::max<std::size_t>(1, std::min(nx, options.max_t_cardinality));
  const auto betas = options.betas.empty() ? default_betas() : options.betas;

  IbSolver solver(reduced, nt);
  Rng rng(options.seed);
  std::uint64_t stream_id = 0;

  // Best of the random starts plus any warm starts handed in.
  const auto solve_at = [&](double beta, const std::vector<const IbSolution*>& warm) {
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
    IbSolution best;
    for (std::size_t r = 0; r < options.restarts; ++r) {
      Rng stream = rng.split(stream_id++);
      std::vector<double> enc(nx * nt);
      for (std::size_t x = 0; x < nx; ++x) {
        double sum = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
          // The first start leans towards the identity assignment so the
          // high-beta solutions do not depend on luck.
          double v = stream.uniform();
          if (r == 0 && t == x % nt) v += 4.0;
          enc[x * nt + t] = v;
          sum += v;
        }
        for (std::size_t t = 0; t < nt; ++t) enc[x * nt + t] /= sum;
      }
      auto sol = solver.solve(beta, std::move(enc), options.tol, options.max_iterations);
      if (sol.objective < best.objective) best = std::move(sol);
    }
    for (const IbSolution* w : warm) {
      auto sol = solver.solve(beta, w->encoder, options.tol, options.max_iterations);
      if (sol.objective < best.objective) best = std::move(sol);
    }
    return best;
  };

  std::map<double, IbSolution> by_beta;
  for (const double beta : betas) by_beta.emplace(beta, solve_at(beta, {}));

  // Rows with close conditionals only separate at large beta; push the top
  // of the range up until the solutions reach the full-information end.
  const double hx_nats = [&] {
    double h = 0.0;
    for (const double p : reduced.px) {
      if (p > 0.0) h -= p * std::log(p);
    }
    return h;
  }();
  for (std::size_t extra = 0; extra < options.refinements && !by_beta.empty(); ++extra) {
    const auto& [top_beta, top] = *by_beta.rbegin();
    if ((hx_nats - top.ixt) / kLn2 <= options.refine_gap || top_beta >= options.max_beta) break;
    const double beta = std::min(options.max_beta, std::max(top_beta, 1.0) * 4.0);
    auto sol = solve_at(beta, {&top});
    by_beta.emplace(beta, std::move(sol));
  }

  // Chords between far-apart solutions cut under the concave frontier, so
  // bisect (geometrically) the widest I(X;T) gaps while budget remains.
  for (std::size_t extra = 0; extra < options.refinements; ++extra) {
    double widest = options.refine_gap;
    std::map<double, IbSolution>::iterator left = by_beta.end();
    for (auto it = by_beta.begin(); std::next(it) != by_beta.end(); ++it) {
      const auto nxt = std::next(it);
      if (it->first <= 0.0 || nxt->first / it->first < 1.0001) continue;
      const double gap = std::abs(nxt->second.ixt - it->second.ixt) / kLn2;
      if (gap > widest) {
        widest = gap;
        left = it;
      }
    }
    if (left == by_beta.end()) break;
    const auto right = std::next(left);
    const double beta = std::sqrt(left->first * right->first);
    auto sol = solve_at(beta, {&left->second, &right->second});
    by_beta.emplace(beta, std::move(sol));
  }

  std::vector<IbPoint> solved;
  solved.reserve(by_beta.size() + 1);
  for (const auto& [beta, sol] : by_beta) {
    solved.push_back(IbPoint{beta, sol.ixt / kLn2, sol.iyt / kLn2});
  }

  // T = (merged) X is always feasible and reaches I(X;Y).
  std::vector<double> hx_terms = reduced.px;
  const double hx = entropy(hx_terms);
  const double ixy = mutual_information(joint);
  solved.push_back(IbPoint{std::numeric_limits<double>::infinity(), hx, ixy});
  auto boundary = boundary_from_points(std::move(solved));
  boundary.mutual_information = ixy;
  return boundary;
}

// ---------------------------------------------------------------------------
// IPAR

namespace {

struct Areas {
  double region1 = 0.0;
  double region2 = 0.0;
};

Areas exact_areas(const PiecewiseLinear& f, const PiecewiseLinear& g, double a, double b) {
  std::vector<double> xs{a, b};
  for (const auto& [x, y] : f.points()) {
    if (x > a && x < b) xs.push_back(x);
  }
  for (const auto& [x, y] : g.points()) {
    if (x > a && x < b) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  Areas areas;
  const auto add = [&](double x0, double x1) {
    const double f0 = f(x0);
    const double f1 = f(x1);
    const double h0 = std::min(f0, g(x0));
    const double h1 = std::min(f1, g(x1));
    const double w = x1 - x0;
    areas.region1 += 0.5 * ((f0 - h0) + (f1 - h1)) * w;
    areas.region2 += 0.5 * (h0 + h1) * w;
  };
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = xs[i + 1];
    const double d0 = f(x0) - g(x0);
    const double d1 = f(x1) - g(x1);
    if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0)) {
      const double xc = x0 + (x1 - x0) * d0 / (d0 - d1);
      add(x0, xc);
      add(xc, x1);
    } else {
      add(x0, x1);
    }
  }
  return areas;
}

}  // namespace

IparReport ipar(const PiecewiseLinear& boundary, const InfoTrajectory& traj,
                AreaMethod method, std::size_t mc_samples, std::uint64_t seed) {
  if (traj.size() < 2) throw std::invalid_argument("trajectory needs at least two points");
  std::vector<std::pair<double, double>> pts;
  pts.reserve(traj.size());
  for (const auto& p : traj) pts.emplace_back(p.ixt, p.iyt);
  const PiecewiseLinear g(std::move(pts));
  IparReport report;
  report.method = method;
  report.a = g.points().front().first;
  report.b = g.points().back().first;
  if (!(report.b - report.a > 1e-12)) {
    throw std::domain_error("trajectory spans a degenerate I(X;T) interval");
  }

  if (method == AreaMethod::Trapezoid) {
    const auto areas = exact_areas(boundary, g, report.a, report.b);
    report.area1 = areas.region1;
    report.area2 = areas.region2;
  } else {
    if (mc_samples == 0) throw std::invalid_argument("mc_samples must be >= 1");
    double top = std::max(boundary(report.a), boundary(report.b));
    for (const auto& [x, y] : boundary.points()) {
      if (x > report.a && x < report.b) top = std::max(top, y);
    }
    Rng rng(seed);
    std::size_t in1 = 0;
    std::size_t in2 = 0;
    for (std::size_t s = 0; s < mc_samples; ++s) {
      const double x = report.a + (report.b - report.a) * rng.uniform();
      const double y = top * rng.uniform();
      const double f = boundary(x);
      const double h = std::min(f, g(x));
      if (y < h) {
        ++in2;
      } else if (y < f) {
        ++in1;
      }
    }
    const double box = (report.b - report.a) * top;
    const auto n = static_cast<double>(mc_samples);
    report.area1 = box * static_cast<double>(in1) / n;
    report.area2 = box * static_cast<double>(in2) / n;
    if (in2 > 0) {
      const double p2 = static_cast<double>(in2) / n;
      const double r = static_cast<double>(in1) / static_cast<double>(in2);
      // Delta-method variance of a ratio of multinomial proportions.
      report.mc_stderr = std::sqrt(r * (1.0 + r) / (n * p2));
    }
  }
  if (!(report.area2 > 0.0)) {
    throw std::domain_error("region under the trajectory has zero area");
  }
  report.ipar = report.area1 / report.area2;
  return report;
}

IparReport ipar(const IbBoundary& boundary, const InfoTrajectory& traj, AreaMethod method,
                std::size_t mc_samples, std::uint64_t seed) {
  return ipar(boundary.curve, traj, method, mc_samples, seed);
}

GapReport constrained_gap_check(const IbBoundary& boundary, const InfoTrajectory& traj,
                                double tolerance) {
  GapReport report;
  report.min_gap = std::numeric_limits<double>::infinity();
  for (const auto& p : traj) {
    const double gap = boundary(p.ixt) - p.iyt;
    report.gaps.push_back(gap);
    report.min_gap = std::min(report.min_gap, gap);
    if (gap < -tolerance) report.feasible = false;
  }
  if (traj.empty()) report.min_gap = 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<std::string>> read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return csv::parse(buffer.str());
}

double parse_double(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw DataError("bad number '" + text + "'");
  return v;
}

}  // namespace

void write_trajectory_csv(const InfoTrajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "k,I_XT_bits,I_YT_bits\n";
  for (const auto& p : traj) out << p.k << ',' << fmt(p.ixt) << ',' << fmt(p.iyt) << '\n';
}

InfoTrajectory read_trajectory_csv(const std::filesystem::path& path) {
  const auto rows = read_csv_file(path);
  if (rows.empty() || rows.front() != std::vector<std::string>{"k", "I_XT_bits", "I_YT_bits"}) {
    throw DataError("trajectory CSV must start with header k,I_XT_bits,I_YT_bits");
  }
  InfoTrajectory traj;
  try {
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 3) throw DataError("trajectory row with wrong field count");
      traj.push_back(InfoPoint{std::stoul(rows[r][0]), parse_double(rows[r][1]),
                               parse_double(rows[r][2])});
    }
  } catch (const std::logic_error& e) {
    throw DataError(std::string("bad trajectory CSV: ") + e.what());
  }
  return traj;
}

void write_boundary_csv(const IbBoundary& boundary, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "beta,I_XT_bits,I_YT_bits\n";
  for (const auto& p : boundary.solved) {
    out << fmt(p.beta) << ',' << fmt(p.ixt) << ',' << fmt(p.iyt) << '\n';
  }
}

IbBoundary read_boundary_csv(const std::filesystem::path& path) {
  const auto rows = read_csv_file(path);
  if (rows.empty() ||
      rows.front() != std::vector<std::string>{"beta", "I_XT_bits", "I_YT_bits"}) {
    throw DataError("boundary CSV must start with header beta,I_XT_bits,I_YT_bits");
  }
  std::vector<IbPoint> pts;
  try {
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 3) throw DataError("boundary row with wrong field count");
      pts.push_back(IbPoint{parse_double(rows[r][0]), parse_double(rows[r][1]),
                            parse_double(rows[r][2])});
    }
  } catch (const std::logic_error& e) {
    throw DataError(std::string("bad boundary CSV: ") + e.what());
  }
  if (pts.empty()) throw DataError("boundary CSV has no points");
  return boundary_from_points(std::move(pts));
}

std::string ipar_to_json(const IparReport& report) {
  nlohmann::ordered_json doc;
  doc["a"] = report.a;
  doc["b"] = report.b;
  doc["area1"] = report.area1;
  doc["area2"] = report.area2;
  doc["ipar"] = report.ipar;
  doc["method"] = report.method == AreaMethod::Trapezoid ? "trapezoid" : "monte_carlo";
  if (report.mc_stderr) doc["mc_stderr"] = *report.mc_stderr;
  return doc.dump(2);
}

}  // namespace lzwdl
