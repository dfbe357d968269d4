#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <cmath>

#include "lzwdl/classifier.hpp"
#include "lzwdl/random.hpp"

using namespace lzwdl;

namespace {

// Central-difference check of every parameter; returns the worst relative error.
double gradient_check(MlpModel model, const SparseMatrix& x, std::span<const ClassId> y) {
  const auto g = mlp_loss_and_gradient(model, x, y);
  const double h = 1e-5;
  double worst = 0.0;
  const auto probe = [&](std::vector<double>& params, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = mlp_loss(model, x, y);
      params[i] = saved - h;
      const double down = mlp_loss(model, x, y);
      params[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
      worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
    }
  };
  probe(model.w1, g.w1);
  probe(model.b1, g.b1);
  probe(model.w2, g.w2);
  probe(model.b2, g.b2);
  return worst;
}

}  // namespace

TEST_CASE("svm separates a trivially separable toy") {
  const SparseMatrix x{2, {{0}, {1}}};
  const std::vector<ClassId> y{0, 1};
  const Model m = fit_svm(x, y, 2, SvmParams{0.01, 50, 1});
  CHECK(evaluate(m, x, y).accuracy == 1.0);
}

TEST_CASE("svm on identical rows is at chance") {
  const SparseMatrix x{2, {{0}, {0}, {0}, {0}}};
  const std::vector<ClassId> y{0, 1, 0, 1};
  const Model m = fit_svm(x, y, 2, SvmParams{0.01, 20, 1});
  CHECK(evaluate(m, x, y).accuracy == doctest::Approx(0.5));
}

TEST_CASE("svm objective decreases overall") {
  Rng rng(2);
  SparseMatrix x{10, {}};
  std::vector<ClassId> y;
  for (int i = 0; i < 200; ++i) {
    const ClassId label = static_cast<ClassId>(rng.below(3));
    std::vector<AtomId> row{label};
    for (AtomId f = 3; f < 10; ++f) {
      if (rng.uniform() < 0.3) row.push_back(f);
    }
    x.rows.push_back(row);
    y.push_back(label);
  }
  const auto m = fit_svm(x, y, 3, SvmParams{1e-3, 30, 4});
  REQUIRE(m.objective_history.size() == 30);
  CHECK(m.objective_history.back() < m.objective_history.front());
  CHECK(svm_objective(m, x, y) == doctest::Approx(m.objective_history.back()));
  CHECK(evaluate(Model{m}, x, y).accuracy == 1.0);
}

TEST_CASE("mlp solves xor") {
  // Four ReLU units on XOR have bad local minima, so count over seeds.
  const SparseMatrix x{2, {{}, {0}, {1}, {0, 1}}};
  const std::vector<ClassId> y{0, 1, 1, 0};
  int solved = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Model m = fit_mlp(x, y, 2, MlpParams{4, 0.1, 2000, seed});
    solved += evaluate(m, x, y).accuracy == 1.0;
  }
  CHECK(solved >= 35);
}

TEST_CASE("mlp with one hidden unit on a separable toy") {
  const SparseMatrix x{2, {{0}, {1}, {0}, {1}}};
  const std::vector<ClassId> y{0, 1, 0, 1};
  const Model m = fit_mlp(x, y, 2, MlpParams{1, 0.1, 500, 5});
  CHECK(evaluate(m, x, y).accuracy == 1.0);
}

TEST_CASE("mlp gradient agrees with finite differences") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    // 2 features, 2 hidden, 2 classes: 4 + 2 + 4 + 2 parameters.
    MlpModel m;
    m.num_features = 2;
    m.hidden = 2;
    m.num_classes = 2;
    for (auto* v : {&m.w1, &m.b1, &m.w2, &m.b2}) {
      const std::size_t n = v == &m.w1 || v == &m.w2 ? 4 : 2;
      for (std::size_t i = 0; i < n; ++i) v->push_back(rng.normal());
    }
    const SparseMatrix x{2, {{0}, {1}, {0, 1}}};
    const std::vector<ClassId> y{0, 1, static_cast<ClassId>(rng.below(2))};
    CHECK(gradient_check(m, x, y) < 1e-4);
  }
}

TEST_CASE("parameter validation") {
  const SparseMatrix x{2, {{0}, {1}}};
  const std::vector<ClassId> y{0, 1}, same{0, 0};
  CHECK_THROWS(fit_svm(x, same, 2, {}));
  CHECK_THROWS(fit_mlp(x, y, 2, MlpParams{0, 0.1, 10, 0}));
  CHECK_THROWS(fit_mlp(x, y, 2, MlpParams{2, 0.0, 10, 0}));
  CHECK_THROWS(fit_mlp(x, y, 2, MlpParams{2, 0.1, 0, 0}));
  CHECK_THROWS(fit_svm(x, std::vector<ClassId>{0}, 2, {}));
}

TEST_CASE("training is reproducible for a fixed seed") {
  const SparseMatrix x{3, {{0}, {1}, {2}, {0, 1}, {1, 2}}};
  const std::vector<ClassId> y{0, 1, 1, 0, 1};
  CHECK(model_to_json(fit_mlp(x, y, 2, MlpParams{3, 0.05, 30, 9})) ==
        model_to_json(fit_mlp(x, y, 2, MlpParams{3, 0.05, 30, 9})));
  CHECK(model_to_json(fit_svm(x, y, 2, SvmParams{1e-3, 10, 9})) ==
        model_to_json(fit_svm(x, y, 2, SvmParams{1e-3, 10, 9})));
}

TEST_CASE("evaluation report") {
  const std::vector<ClassId> truth{0, 1, 2, 0}, pred{0, 1, 2, 0};
  const auto r = make_report(truth, pred, 3);
  CHECK(r.accuracy == 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) CHECK(r.confusion[i][j] == 0);
    }
  }
  const std::vector<ClassId> t2{0, 0, 1, 1}, p2{0, 1, 1, 1};
  const auto r2 = make_report(t2, p2, 2);
  CHECK(r2.accuracy == 0.75);
  CHECK(r2.precision[1] == doctest::Approx(2.0 / 3.0));
  CHECK(r2.recall[0] == 0.5);
  CHECK_THROWS(make_report(std::vector<ClassId>{}, std::vector<ClassId>{}, 2));
}

TEST_CASE("evaluate agrees with predict") {
  const SparseMatrix x{3, {{0}, {1}, {2}, {0, 2}}};
  const std::vector<ClassId> y{0, 1, 1, 0};
  const Model m = fit_svm(x, y, 2, SvmParams{0.1, 5, 2});
  const auto p = predict(m, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += p[i] == y[i];
  CHECK(evaluate(m, x, y).accuracy == static_cast<double>(hits) / 4.0);
}

TEST_CASE("model selection") {
  const SparseMatrix x{2, {{0}, {1}}};
  const std::vector<ClassId> y{0, 1};
  LinearModel good{2, 2, {1, 0, 0, 1}, {0, 0}, {}, {}};
  LinearModel bad{2, 2, {0, 1, 1, 0}, {0, 0}, {}, {}};
  MlpModel mlp_half{2, 1, 2, {1, -1}, {0}, {1, -1}, {0, 0}, {}};
  // mlp_half gets row {1} wrong: h = relu(-1) = 0 gives tied scores, so class 0.
  CHECK(select_model({Model{good}}, x, y) == 0);
  CHECK(select_model({Model{bad}, Model{good}}, x, y) == 1);
  CHECK(select_model({Model{mlp_half}, Model{bad}}, x, y) == 0);
  CHECK(select_model({Model{mlp_half}, Model{good}}, x, y) == 1);
  CHECK(select_model({Model{good}, Model{LinearModel{good}}}, x, y) == 0);
  MlpModel mlp_perfect{2, 1, 2, {1, 0}, {0}, {1, -1}, {0, 0.5}, {}};
  CHECK(evaluate(Model{mlp_perfect}, x, y).accuracy == 1.0);
  CHECK(select_model({Model{mlp_perfect}, Model{good}}, x, y) == 1);
  CHECK_THROWS(select_model({}, x, y));
}

TEST_CASE("empty row scores equal the bias") {
  LinearModel m{3, 2, {1, 2, 3, 4, 5, 6}, {0.5, -0.5}, {}, {}};
  const auto s = scores(m, std::span<const AtomId>{});
  CHECK(s == std::vector<double>{0.5, -0.5});
}

TEST_CASE("model json round trip and validation") {
  const SparseMatrix x{3, {{0}, {1}, {2}, {0, 2}}};
  const std::vector<ClassId> y{0, 1, 1, 0};
  for (const Model& m : {Model{fit_svm(x, y, 2, SvmParams{0.1, 5, 2})},
                         Model{fit_mlp(x, y, 2, MlpParams{3, 0.1, 5, 2})}}) {
    const auto text = model_to_json(m);
    const auto back = model_from_json(text);
    CHECK(model_to_json(back) == text);
    CHECK(predict(back, x) == predict(m, x));
  }
  CHECK_THROWS(model_from_json(R"({"kind": "svm", "num_features": 2, "num_classes": 2,
                                   "weights": [1, 2, 3], "bias": [0, 0]})"));
  CHECK_THROWS(model_from_json(R"({"kind": "tree"})"));
  CHECK_THROWS(model_from_json("{"));
}
