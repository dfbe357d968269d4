#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <cmath>
#include <limits>

#include "../oracles/oracles.hpp"
#include "lzwdl/dpm.hpp"
#include "lzwdl/infotheory.hpp"
#include "lzwdl/random.hpp"
#include "test_util.hpp"

using namespace lzwdl;

namespace {

std::vector<std::vector<double>> random_joint(Rng& rng, std::size_t nx, std::size_t ny) {
  std::vector<std::vector<double>> p(nx, std::vector<double>(ny));
  double total = 0;
  for (auto& row : p) {
    for (auto& v : row) {
      v = rng.uniform() + 0.01;
      total += v;
    }
  }
  for (auto& row : p) {
    for (auto& v : row) v /= total;
  }
  return p;
}

InfoTrajectory line(std::initializer_list<std::pair<double, double>> pts) {
  InfoTrajectory t;
  std::size_t k = 1;
  for (const auto& [x, y] : pts) t.push_back(InfoPoint{k++, x, y});
  return t;
}

}  // namespace

TEST_CASE("entropy values") {
  CHECK(entropy(DiscreteDistribution({0.5, 0.5})) == doctest::Approx(1.0));
  CHECK(entropy(DiscreteDistribution({1.0, 0.0})) == 0.0);
  CHECK(entropy(DiscreteDistribution({0.5, 0.25, 0.25})) == doctest::Approx(1.5));
  CHECK_THROWS(DiscreteDistribution({0.5, 0.6}));
  CHECK_THROWS(DiscreteDistribution({1.5, -0.5}));
  const std::vector<std::uint64_t> counts{2, 2, 4};
  CHECK(entropy(DiscreteDistribution::from_counts(counts)) == doctest::Approx(1.5));
}

TEST_CASE("mutual information values") {
  CHECK(mutual_information(JointDistribution::from_rows({{0.5, 0}, {0, 0.5}})) ==
        doctest::Approx(1.0));
  CHECK(mutual_information(JointDistribution::from_rows({{0.25, 0.25}, {0.25, 0.25}})) ==
        doctest::Approx(0.0));
  CHECK(mutual_information(JointDistribution::from_rows({{0.4, 0.1}, {0.1, 0.4}})) ==
        doctest::Approx(0.278072).epsilon(1e-6));
}

TEST_CASE("mutual information matches direct summation on random joints") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_joint(rng, 1 + rng.below(6), 1 + rng.below(4));
    const double ours = mutual_information(JointDistribution::from_rows(p));
    CHECK(ours == doctest::Approx(oracle::mutual_information(p)).epsilon(1e-9).scale(1.0));
    CHECK(ours >= 0.0);
  }
}

TEST_CASE("plug-in I(X;T)") {
  const auto c = LabeledCorpus::from_texts({"a", "b", "c", "d"}, {"x", "x", "y", "y"},
                                           Level::Char);
  CHECK(estimate_ixt(c, SparseMatrix{2, {{0}, {0}, {0}, {0}}}) == 0.0);
  CHECK(estimate_ixt(c, SparseMatrix{4, {{0}, {1}, {2}, {3}}}) == doctest::Approx(2.0));
  CHECK(estimate_ixt(c, SparseMatrix{2, {{0}, {0}, {1}, {1}}}) == doctest::Approx(1.0));
  // Duplicate documents are one value of X.
  const auto dup = LabeledCorpus::from_texts({"a", "a", "b", "b"}, {"x", "y", "x", "y"},
                                             Level::Char);
  CHECK(estimate_ixt(dup, SparseMatrix{4, {{0}, {0}, {1}, {1}}}) == doctest::Approx(1.0));
  CHECK_THROWS(estimate_ixt(c, SparseMatrix{2, {{0}}}));
}

TEST_CASE("plug-in I(Y;T)") {
  const std::vector<ClassId> y{0, 0, 1, 1};
  CHECK(estimate_iyt(y, SparseMatrix{2, {{0}, {0}, {0}, {0}}}) == 0.0);
  CHECK(estimate_iyt(y, SparseMatrix{2, {{0}, {0}, {1}, {1}}}) == doctest::Approx(1.0));
  CHECK(estimate_iyt(y, SparseMatrix{2, {{0}, {1}, {0}, {1}}}) == doctest::Approx(0.0));
}

TEST_CASE("empirical joint") {
  const auto c = LabeledCorpus::from_texts({"a", "a", "b", "c"}, {"x", "y", "x", "x"},
                                           Level::Char);
  const auto j = empirical_joint(c);
  CHECK(j.rows() == 3);
  CHECK(j.cols() == 2);
  double total = 0;
  for (double v : j.values()) total += v;
  CHECK(total == doctest::Approx(1.0));
  CHECK(j(0, 0) == doctest::Approx(0.25));
  CHECK(j(0, 1) == doctest::Approx(0.25));
}

TEST_CASE("trajectory bounds") {
  const auto c = LabeledCorpus::from_texts(
      {"free cash", "win free", "hi mom", "see you", "cash win", "call mom"},
      {"s", "s", "h", "h", "s", "h"}, Level::Char);
  const auto d = build_dictionary(concatenate(c), Level::Char, 32);
  const auto hx = entropy(empirical_joint(c).marginal_x());
  const auto ixy = mutual_information(empirical_joint(c));
  const auto traj = trajectory(c, d, {1, 2, 4, 8, d.size()});
  REQUIRE(traj.size() == 5);
  CHECK(traj[0].ixt <= 1.0 + 1e-12);
  for (const auto& p : traj) {
    CHECK(p.iyt <= ixy + 1e-12);
    CHECK(p.ixt <= hx + 1e-12);
    CHECK(p.iyt <= p.ixt + 1e-12);
  }
  CHECK_THROWS(trajectory(c, d, {4, 2}));
  CHECK_THROWS(trajectory(c, d, {0}));
}

TEST_CASE("full dictionary keeps distinct samples distinct when their atom sets differ") {
  // Each sample is one distinct symbol: every row of the full-dictionary
  // code is a different singleton.
  const auto c = LabeledCorpus::from_texts({"a", "b", "c", "d", "e"}, {"x", "x", "y", "y", "y"},
                                           Level::Char);
  const auto d = build_dictionary(concatenate(c), Level::Char, 32);
  const auto traj = trajectory(c, d, {d.size()});
  CHECK(traj[0].ixt == doctest::Approx(std::log2(5.0)));
}

TEST_CASE("default k sweep") {
  CHECK(default_k_sweep(10) == std::vector<std::size_t>{2, 4, 8, 10});
  CHECK(default_k_sweep(8) == std::vector<std::size_t>{2, 4, 8});
  CHECK(default_k_sweep(1) == std::vector<std::size_t>{1});
}

TEST_CASE("piecewise linear") {
  const PiecewiseLinear f({{0, 0}, {1, 2}, {1, 3}, {2, 3}});
  CHECK(f(0.5) == doctest::Approx(1.5));
  CHECK(f(1.0) == doctest::Approx(3.0));
  CHECK(f(-1) == 0.0);
  CHECK(f(5) == 3.0);
  CHECK_THROWS(PiecewiseLinear(std::vector<std::pair<double, double>>{}));
}

TEST_CASE("concave envelope") {
  const auto env = concave_envelope({{1, 1}, {2, 1.2}, {0.5, 0.1}, {3, 1.1}});
  // origin, (1,1), (2,1.2) then flat
  REQUIRE(env.size() == 3);
  CHECK(env[0] == std::pair<double, double>{0, 0});
  CHECK(env[1] == std::pair<double, double>{1, 1});
  CHECK(env[2] == std::pair<double, double>{2, 1.2});
}

TEST_CASE("ib boundary end points") {
  const auto joint = JointDistribution::from_rows({{0.4, 0.1}, {0.1, 0.4}});
  IbOptions opt;
  opt.betas = {0.0, 1e3};
  const auto b = ib_boundary(joint, opt);
  REQUIRE(b.solved.size() == 3);
  CHECK(b.solved[0].ixt == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  CHECK(b.solved[0].iyt == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  CHECK(b.solved[1].iyt == doctest::Approx(0.278072).epsilon(1e-3));
  CHECK(std::isinf(b.solved[2].beta));
  CHECK(b(10.0) == doctest::Approx(0.278072).epsilon(1e-3));
  CHECK(b(0.0) == 0.0);
}

TEST_CASE("ib boundary is min(x, H(Y)) for deterministic labels") {
  // Y is a function of X with H(Y) = 1: the frontier rises with slope 1 up to 1 bit.
  const auto joint =
      JointDistribution::from_rows({{0.25, 0}, {0.25, 0}, {0, 0.25}, {0, 0.25}});
  const auto b = ib_boundary(joint);
  for (double x : {0.1, 0.5, 0.9, 1.5, 2.0}) {
    CHECK(b(x) == doctest::Approx(std::min(x, 1.0)).epsilon(1e-3));
  }
}

TEST_CASE("ib boundary dominates every deterministic encoder") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_joint(rng, 4, 2);
    IbOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto b = ib_boundary(JointDistribution::from_rows(p), opt);
    double worst = 0.0;
    oracle::for_each_partition(4, [&](const std::vector<std::size_t>& block) {
      const auto [ixt, iyt] = oracle::partition_point(p, block);
      worst = std::min(worst, b(ixt) - iyt);
    });
    CHECK(worst >= -1e-3);
  }
}

TEST_CASE("ib guard") {
  std::vector<std::vector<double>> rows(10, std::vector<double>{0.05, 0.05});
  IbOptions opt;
  opt.max_x_support = 5;
  CHECK_THROWS_AS(ib_boundary(JointDistribution::from_rows(rows), opt), GuardError);
}

TEST_CASE("encoder information") {
  const auto joint = JointDistribution::from_rows({{0.4, 0.1}, {0.1, 0.4}});
  const std::vector<double> identity{1, 0, 0, 1}, constant{1, 1};
  const auto id = encoder_information(joint, identity, 2);
  CHECK(id.ixt == doctest::Approx(1.0));
  CHECK(id.iyt == doctest::Approx(0.278072).epsilon(1e-6));
  const auto c = encoder_information(joint, constant, 1);
  CHECK(c.ixt == doctest::Approx(0.0));
  CHECK(c.iyt == doctest::Approx(0.0));
}

TEST_CASE("ipar closed forms") {
  const PiecewiseLinear f({{0, 0}, {1, 1}});
  const auto half = line({{0, 0}, {1, 0.5}});
  const auto r = ipar(f, half, AreaMethod::Trapezoid);
  CHECK(r.area1 == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.area2 == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.ipar == doctest::Approx(1.0).epsilon(1e-12));

  const auto same = line({{0, 0}, {0.5, 0.5}, {1, 1}});
  CHECK(ipar(f, same, AreaMethod::Trapezoid).ipar == 0.0);

  const auto mc = ipar(f, half, AreaMethod::MonteCarlo, 100000, 3);
  REQUIRE(mc.mc_stderr);
  CHECK(std::abs(mc.ipar - 1.0) <= 3 * *mc.mc_stderr);

  CHECK_THROWS(ipar(f, line({{0.5, 0.1}}), AreaMethod::Trapezoid));
  CHECK_THROWS(ipar(f, line({{0.5, 0.1}, {0.5, 0.2}}), AreaMethod::Trapezoid));
  CHECK_THROWS(ipar(f, line({{0, 0}, {1, 0}}), AreaMethod::Trapezoid));
}

TEST_CASE("ipar agrees with numerical integration on crossing curves") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::pair<double, double>> fp{{0, 0}};
    double x = 0, y = 0;
    for (int i = 0; i < 5; ++i) {
      x += 0.1 + rng.uniform();
      y += rng.uniform() * 0.5;
      fp.push_back({x, y});
    }
    const PiecewiseLinear f(fp);
    InfoTrajectory t;
    double tx = 0.05;
    for (std::size_t i = 0; i < 6; ++i) {
      t.push_back(InfoPoint{i + 1, tx, f(tx) * (0.3 + 0.9 * rng.uniform())});
      tx += 0.1 + 0.6 * rng.uniform();
    }
    std::vector<std::pair<double, double>> gp;
    for (const auto& p : t) gp.push_back({p.ixt, p.iyt});
    const PiecewiseLinear g(gp);
    const auto ref = oracle::areas([&](double v) { return f(v); },
                                   [&](double v) { return g(v); }, t.front().ixt, t.back().ixt);
    const auto r = ipar(f, t, AreaMethod::Trapezoid);
    CHECK(r.area1 == doctest::Approx(ref.region1).epsilon(1e-6));
    CHECK(r.area2 == doctest::Approx(ref.region2).epsilon(1e-6));
  }
}

TEST_CASE("gap check") {
  const auto b = boundary_from_points({{1.0, 1.0, 1.0}, {2.0, 2.0, 1.5}});
  const auto on = constrained_gap_check(b, line({{0, 0}, {1, 1}, {2, 1.5}}));
  CHECK(on.feasible);
  CHECK(on.min_gap == doctest::Approx(0.0));
  const auto above = constrained_gap_check(b, line({{0.5, 0.9}}));
  CHECK_FALSE(above.feasible);
  CHECK(above.gaps[0] == doctest::Approx(-0.4));
}

TEST_CASE("csv round trips") {
  TempDir dir;
  const auto t = line({{0.1, 0.05}, {1.0 / 3.0, 0.2}, {2.5, 0.7}});
  write_trajectory_csv(t, dir.path / "t.csv");
  const auto back = read_trajectory_csv(dir.path / "t.csv");
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back[i].k == t[i].k);
    CHECK(back[i].ixt == t[i].ixt);
    CHECK(back[i].iyt == t[i].iyt);
  }

  const auto b = ib_boundary(JointDistribution::from_rows({{0.3, 0.1}, {0.2, 0.4}}));
  write_boundary_csv(b, dir.path / "b.csv");
  const auto bb = read_boundary_csv(dir.path / "b.csv");
  REQUIRE(bb.solved.size() == b.solved.size());
  for (std::size_t i = 0; i < b.solved.size(); ++i) {
    CHECK(bb.solved[i].beta == b.solved[i].beta);
    CHECK(bb.solved[i].ixt == b.solved[i].ixt);
  }
  CHECK(bb.curve.points() == b.curve.points());
}

TEST_CASE("kernel I(X;T) estimate") {
  // Two well separated clusters coded by cluster: I(X;T) close to H(T) = 1 bit.
  Rng rng(41);
  std::vector<std::vector<double>> emb;
  SparseMatrix codes{2, {}};
  for (int i = 0; i < 200; ++i) {
    const bool left = i % 2 == 0;
    emb.push_back({(left ? -10.0 : 10.0) + rng.normal(), rng.normal()});
    codes.rows.push_back({left ? AtomId{0} : AtomId{1}});
  }
  CHECK(estimate_ixt_kde(emb, codes) == doctest::Approx(1.0).epsilon(0.02));
  SparseMatrix constant{2, std::vector<std::vector<AtomId>>(200, {0})};
  CHECK(estimate_ixt_kde(emb, constant) == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
}
