#include "lzwdl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "lzwdl/random.hpp"

namespace lzwdl {

namespace {

void check_training_data(const SparseMatrix& x, std::span<const ClassId> y,
                         std::size_t num_classes) {
  if (x.num_rows() != y.size()) {
    throw std::invalid_argument("feature rows and labels differ in length");
  }
  if (x.num_rows() == 0) throw std::invalid_argument("no training rows");
  std::vector<bool> present(num_classes, false);
  for (const ClassId label : y) {
    if (label >= num_classes) throw std::invalid_argument("label out of range");
    present[label] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw std::invalid_argument("training data contains a single class");
  }
  for (const auto& row : x.rows) {
    if (!row.empty() && row.back() >= x.cols) {
      throw std::invalid_argument("feature index out of range");
    }
  }
}

void check_dimensions(std::size_t model_features, const SparseMatrix& x) {
  if (x.cols != model_features) {
    throw std::invalid_argument("model expects " + std::to_string(model_features) +
                                " features, matrix has " + std::to_string(x.cols));
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  return order;
}

ClassId argmax(const std::vector<double>& values) {
  return static_cast<ClassId>(std::max_element(values.begin(), values.end()) -
                              values.begin());
}

}  // namespace

LinearModel fit_svm(const SparseMatrix& x, std::span<const ClassId> y,
                    std::size_t num_classes, const SvmParams& params) {
  check_training_data(x, y, num_classes);
  if (!(params.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (params.epochs == 0) throw std::invalid_argument("epochs must be >= 1");

  const std::size_t d = x.cols;
  LinearModel model;
  model.num_features = d;
  model.num_classes = num_classes;
  model.weights.assign(num_classes * d, 0.0);
  model.bias.assign(num_classes, 0.0);
  model.params = params;

  // w = scale * v keeps the shrink step O(1) for sparse rows.
  std::vector<std::vector<double>> v(num_classes, std::vector<double>(d, 0.0));
  std::vector<double> scale(num_classes, 1.0);
  const double t0 = 1.0 / params.lambda;
  Rng rng(params.seed);
  double t = 0.0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (const std::size_t i : epoch_order(x.num_rows(), rng)) {
      const double eta = 1.0 / (params.lambda * (t + t0));
      t += 1.0;
      const auto& row = x.rows[i];
      for (std::size_t c = 0; c < num_classes; ++c) {
        auto& vc = v[c];
        const double target = y[i] == c ? 1.0 : -1.0;
        double dot = 0.0;
        for (const AtomId j : row) dot += vc[j];
        const double margin = target * (scale[c] * dot + model.bias[c]);
        scale[c] *= 1.0 - eta * params.lambda;
        if (margin < 1.0) {
          const double step = eta * target / scale[c];
          for (const AtomId j : row) vc[j] += step;
          model.bias[c] += eta * target;
        }
        if (scale[c] < 1e-9) {
          for (auto& value : vc) value *= scale[c];
          scale[c] = 1.0;
        }
      }
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t j = 0; j < d; ++j) model.weights[c * d + j] = scale[c] * v[c][j];
    }
    model.objective_history.push_back(svm_objective(model, x, y));
  }
  return model;
}

double svm_objective(const LinearModel& model, const SparseMatrix& x,
                     std::span<const ClassId> y) {
  const std::size_t d = model.num_features;
  double total = 0.0;
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      norm += model.weights[c * d + j] * model.weights[c * d + j];
    }
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.num_rows(); ++i) {
      double score = model.bias[c];
      for (const AtomId j : x.rows[i]) score += model.weights[c * d + j];
      const double target = y[i] == c ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - target * score);
    }
    total += 0.5 * model.params.lambda * norm + hinge / static_cast<double>(x.num_rows());
  }
  return total / static_cast<double>(model.num_classes);
}

namespace {

struct MlpForward {
  std::vector<double> pre;     // hidden pre-activations
  std::vector<double> hidden;  // rectified
  std::vector<double> probs;   // softmax output
};

MlpForward mlp_forward(const MlpModel& m, std::span<const AtomId> row) {
  MlpForward f;
  f.pre = m.b1;
  for (const AtomId j : row) {
    const double* w = &m.w1[static_cast<std::size_t>(j) * m.hidden];
    for (std::size_t k = 0; k < m.hidden; ++k) f.pre[k] += w[k];
  }
  f.hidden.resize(m.hidden);
  for (std::size_t k = 0; k < m.hidden; ++k) f.hidden[k] = std::max(0.0, f.pre[k]);
  f.probs = m.b2;
  for (std::size_t k = 0; k < m.hidden; ++k) {
    if (f.hidden[k] == 0.0) continue;
    const double* w = &m.w2[k * m.num_classes];
    for (std::size_t c = 0; c < m.num_classes; ++c) f.probs[c] += f.hidden[k] * w[c];
  }
  const double top = *std::max_element(f.probs.begin(), f.probs.end());
  double sum = 0.0;
  for (auto& p : f.probs) {
    p = std::exp(p - top);
    sum += p;
  }
  for (auto& p : f.probs) p /= sum;
  return f;
}

// Adds the gradient of -log p_label for one row, scaled by weight, into g.
void mlp_backward(const MlpModel& m, std::span<const AtomId> row, ClassId label,
                  const MlpForward& f, double weight, MlpGradient& g) {
  std::vector<double> dout = f.probs;
  dout[label] -= 1.0;
  for (auto& v : dout) v *= weight;
  std::vector<double> dhidden(m.hidden, 0.0);
  for (std::size_t k = 0; k < m.hidden; ++k) {
    const double* w = &m.w2[k * m.num_classes];
    double acc = 0.0;
    for (std::size_t c = 0; c < m.num_classes; ++c) {
      g.w2[k * m.num_classes + c] += f.hidden[k] * dout[c];
      acc += w[c] * dout[c];
    }
    dhidden[k] = f.pre[k] > 0.0 ? acc : 0.0;
    g.b1[k] += dhidden[k];
  }
  for (std::size_t c = 0; c < m.num_classes; ++c) g.b2[c] += dout[c];
  for (const AtomId j : row) {
    double* gw = &g.w1[static_cast<std::size_t>(j) * m.hidden];
    for (std::size_t k = 0; k < m.hidden; ++k) gw[k] += dhidden[k];
  }
}

}  // namespace

MlpGradient mlp_loss_and_gradient(const MlpModel& model, const SparseMatrix& x,
                                  std::span<const ClassId> y) {
  check_dimensions(model.num_features, x);
  if (x.num_rows() != y.size() || x.num_rows() == 0) {
    throw std::invalid_argument("rows and labels must be non-empty and equal in length");
  }
  MlpGradient g;
  g.w1.assign(model.w1.size(), 0.0);
  g.b1.assign(model.b1.size(), 0.0);
  g.w2.assign(model.w2.size(), 0.0);
  g.b2.assign(model.b2.size(), 0.0);
  const double weight = 1.0 / static_cast<double>(x.num_rows());
  for (std::size_t i = 0; i < x.num_rows(); ++i) {
    const auto f = mlp_forward(model, x.rows[i]);
    g.loss -= weight * std::log(f.probs[y[i]]);
    mlp_backward(model, x.rows[i], y[i], f, weight, g);
  }
  return g;
}

double mlp_loss(const MlpModel& model, const SparseMatrix& x, std::span<const ClassId> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.num_rows(); ++i) {
    loss -= std::log(mlp_forward(model, x.rows[i]).probs[y[i]]);
  }
  return loss / static_cast<double>(x.num_rows());
}

MlpModel fit_mlp(const SparseMatrix& x, std::span<const ClassId> y,
                 std::size_t num_classes, const MlpParams& params) {
  check_training_data(x, y, num_classes);
  if (params.hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  if (!(params.learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (params.epochs == 0) throw std::invalid_argument("epochs must be >= 1");

  MlpModel m;
  m.num_features = x.cols;
  m.hidden = params.hidden;
  m.num_classes = num_classes;
  m.params = params;
  Rng rng(params.seed);

  // He-style scaling by the mean number of active inputs per row, since the
  // rows are sparse binary indicators.
  double mean_nnz = 0.0;
  for (const auto& row : x.rows) mean_nnz += static_cast<double>(row.size());
  mean_nnz = std::max(1.0, mean_nnz / static_cast<double>(x.num_rows()));
  const double s1 = std::sqrt(2.0 / mean_nnz);
  const double s2 = std::sqrt(1.0 / static_cast<double>(m.hidden));
  m.w1.resize(m.num_features * m.hidden);
  for (auto& w : m.w1) w = s1 * rng.normal();
  m.b1.assign(m.hidden, 0.1);  // keeps units alive on all-zero rows
  m.w2.resize(m.hidden * m.num_classes);
  for (auto& w : m.w2) w = s2 * rng.normal();
  m.b2.assign(m.num_classes, 0.0);

  MlpGradient g;
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(m.hidden, 0.0);
  g.w2.assign(m.w2.size(), 0.0);
  g.b2.assign(m.num_classes, 0.0);
  const double lr = params.learning_rate;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (const std::size_t i : epoch_order(x.num_rows(), rng)) {
      const auto& row = x.rows[i];
      const auto f = mlp_forward(m, row);
      mlp_backward(m, row, y[i], f, 1.0, g);
      // Apply and clear only the touched entries.
      for (const AtomId j : row) {
        const std::size_t base = static_cast<std::size_t>(j) * m.hidden;
        for (std::size_t k = 0; k < m.hidden; ++k) {
          m.w1[base + k] -= lr * g.w1[base + k];
          g.w1[base + k] = 0.0;
        }
      }
      for (std::size_t k = 0; k < m.hidden; ++k) {
        m.b1[k] -= lr * g.b1[k];
        g.b1[k] = 0.0;
      }
      for (std::size_t q = 0; q < m.w2.size(); ++q) {
        m.w2[q] -= lr * g.w2[q];
        g.w2[q] = 0.0;
      }
      for (std::size_t c = 0; c < m.num_classes; ++c) {
        m.b2[c] -= lr * g.b2[c];
        g.b2[c] = 0.0;
      }
    }
  }
  return m;
}

std::vector<double> scores(const LinearModel& model, std::span<const AtomId> row) {
  std::vector<double> out = model.bias;
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    const double* w = &model.weights[c * model.num_features];
    for (const AtomId j : row) out[c] += w[j];
  }
  return out;
}

std::vector<double> scores(const MlpModel& model, std::span<const AtomId> row) {
  return mlp_forward(model, row).probs;
}

std::vector<double> scores(const Model& model, std::span<const AtomId> row) {
  return std::visit([&](const auto& m) { return scores(m, row); }, model);
}

std::size_t num_features(const Model& model) {
  return std::visit([](const auto& m) { return m.num_features; }, model);
}

std::size_t num_classes(const Model& model) {
  return std::visit([](const auto& m) { return m.num_classes; }, model);
}

std::string_view model_kind(const Model& model) {
  return std::holds_alternative<LinearModel>(model) ? "svm" : "mlp";
}

std::vector<ClassId> predict(const Model& model, const SparseMatrix& x) {
  check_dimensions(num_features(model), x);
  std::vector<ClassId> out;
  out.reserve(x.num_rows());
  for (const auto& row : x.rows) {
    if (!row.empty() && row.back() >= x.cols) {
      throw std::invalid_argument("feature index out of range");
    }
    out.push_back(argmax(scores(model, row)));
  }
  return out;
}

EvalReport make_report(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                       std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("truth and prediction lengths differ");
  }
  if (truth.empty()) throw std::invalid_argument("cannot evaluate on an empty set");
  EvalReport report;
  report.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) {
      throw std::invalid_argument("label out of range");
    }
    ++report.confusion[truth[i]][predicted[i]];
    if (truth[i] == predicted[i]) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t predicted_c = 0;
    std::size_t actual_c = 0;
    for (std::size_t r = 0; r < num_classes; ++r) {
      predicted_c += report.confusion[r][c];
      actual_c += report.confusion[c][r];
    }
    const auto tp = static_cast<double>(report.confusion[c][c]);
    report.precision.push_back(predicted_c ? tp / static_cast<double>(predicted_c) : 0.0);
    report.recall.push_back(actual_c ? tp / static_cast<double>(actual_c) : 0.0);
  }
  return report;
}

EvalReport evaluate(const Model& model, const SparseMatrix& x,
                    std::span<const ClassId> y) {
  if (x.num_rows() != y.size()) {
    throw std::invalid_argument("feature rows and labels differ in length");
  }
  const auto predicted = predict(model, x);
  return make_report(y, predicted, num_classes(model));
}

std::size_t select_model(const std::vector<Model>& candidates,
                         const SparseMatrix& x_val, std::span<const ClassId> y_val) {
  if (candidates.empty()) throw std::invalid_argument("no candidate models");
  std::size_t best = 0;
  double best_acc = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double acc = evaluate(candidates[i], x_val, y_val).accuracy;
    const bool prefer_linear = acc == best_acc &&
                               std::holds_alternative<LinearModel>(candidates[i]) &&
                               !std::holds_alternative<LinearModel>(candidates[best]);
    if (acc > best_acc || prefer_linear) {
      best = i;
      best_acc = acc;
    }
  }
  return best;
}

std::string model_to_json(const Model& model) {
  nlohmann::ordered_json doc;
  if (const auto* svm = std::get_if<LinearModel>(&model)) {
    doc["kind"] = "svm";
    doc["num_features"] = svm->num_features;
    doc["num_classes"] = svm->num_classes;
    doc["hyperparams"] = {{"lambda", svm->params.lambda},
                          {"epochs", svm->params.epochs},
                          {"seed", svm->params.seed}};
    doc["weights"] = svm->weights;
    doc["bias"] = svm->bias;
  } else {
    const auto& mlp = std::get<MlpModel>(model);
    doc["kind"] = "mlp";
    doc["num_features"] = mlp.num_features;
    doc["hidden"] = mlp.hidden;
    doc["num_classes"] = mlp.num_classes;
    doc["hyperparams"] = {{"hidden", mlp.params.hidden},
                          {"learning_rate", mlp.params.learning_rate},
                          {"epochs", mlp.params.epochs},
                          {"seed", mlp.params.seed}};
    doc["w1"] = mlp.w1;
    doc["b1"] = mlp.b1;
    doc["w2"] = mlp.w2;
    doc["b2"] = mlp.b2;
  }
  return doc.dump();
}

Model model_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto kind = doc.at("kind").get<std::string>();
    const auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (kind == "svm") {
      LinearModel m;
      m.num_features = doc.at("num_features").get<std::size_t>();
      m.num_classes = doc.at("num_classes").get<std::size_t>();
      const auto& hp = doc.at("hyperparams");
      m.params = SvmParams{hp.at("lambda").get<double>(), hp.at("epochs").get<std::size_t>(),
                           hp.at("seed").get<std::uint64_t>()};
      m.weights = doc.at("weights").get<std::vector<double>>();
      m.bias = doc.at("bias").get<std::vector<double>>();
      if (m.weights.size() != m.num_features * m.num_classes ||
          m.bias.size() != m.num_classes || !finite(m.weights) || !finite(m.bias)) {
        throw DataError("linear model arrays do not match the declared shape");
      }
      return m;
    }
    if (kind == "mlp") {
      MlpModel m;
      m.num_features = doc.at("num_features").get<std::size_t>();
      m.hidden = doc.at("hidden").get<std::size_t>();
      m.num_classes = doc.at("num_classes").get<std::size_t>();
      const auto& hp = doc.at("hyperparams");
      m.params = MlpParams{hp.at("hidden").get<std::size_t>(),
                           hp.at("learning_rate").get<double>(),
                           hp.at("epochs").get<std::size_t>(),
                           hp.at("seed").get<std::uint64_t>()};
      m.w1 = doc.at("w1").get<std::vector<double>>();
      m.b1 = doc.at("b1").get<std::vector<double>>();
      m.w2 = doc.at("w2").get<std::vector<double>>();
      m.b2 = doc.at("b2").get<std::vector<double>>();
      if (m.w1.size() != m.num_features * m.hidden || m.b1.size() != m.hidden ||
          m.w2.size() != m.hidden * m.num_classes || m.b2.size() != m.num_classes ||
          !finite(m.w1) || !finite(m.b1) || !finite(m.w2) || !finite(m.b2)) {
        throw DataError("MLP arrays do not match the declared shape");
      }
      return m;
    }
    throw DataError("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

std::string report_to_json(const EvalReport& report,
                           const std::vector<std::string>& class_names) {
  nlohmann::ordered_json doc;
  doc["accuracy"] = report.accuracy;
  doc["classes"] = class_names;
  doc["precision"] = report.precision;
  doc["recall"] = report.recall;
  doc["confusion"] = report.confusion;
  return doc.dump(2);
}

}  // namespace lzwdl
