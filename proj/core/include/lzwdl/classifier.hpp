#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lzwdl/corpus.hpp"
#include "lzwdl/mdlm.hpp"

namespace lzwdl {

struct SvmParams {
  double lambda = 1e-4;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
};

struct MlpParams {
  std::size_t hidden = 64;
  double learning_rate = 0.05;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear classifier: score_c(x) = <w_c, x> + b_c.
struct LinearModel {
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  std::vector<double> weights;  // num_classes x num_features, row-major
  std::vector<double> bias;     // num_classes
  SvmParams params;
  // Regularized hinge objective (averaged over the one-vs-rest problems)
  // after each epoch.
  std::vector<double> objective_history;
};

/// Single hidden layer with rectifier activation and softmax output.
struct MlpModel {
  std::size_t num_features = 0;
  std::size_t hidden = 0;
  std::size_t num_classes = 0;
  std::vector<double> w1;  // num_features x hidden, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden x num_classes, row-major
  std::vector<double> b2;  // num_classes
  MlpParams params;
};

using Model = std::variant<LinearModel, MlpModel>;

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Hinge-loss subgradient descent (one problem per class), shuffled per
/// epoch from the seed. Step size 1 / (lambda * (t + 1/lambda)).
LinearModel fit_svm(const SparseMatrix& x, std::span<const ClassId> y,
                    std::size_t num_classes, const SvmParams& params);

/// Per-sample SGD on softmax cross-entropy.
MlpModel fit_mlp(const SparseMatrix& x, std::span<const ClassId> y,
                 std::size_t num_classes, const MlpParams& params);

/// Class scores for one row (support of a binary indicator).
std::vector<double> scores(const Model& model, std::span<const AtomId> row);
std::vector<double> scores(const LinearModel& model, std::span<const AtomId> row);
std::vector<double> scores(const MlpModel& model, std::span<const AtomId> row);

std::vector<ClassId> predict(const Model& model, const SparseMatrix& x);
EvalReport evaluate(const Model& model, const SparseMatrix& x,
                    std::span<const ClassId> y);
EvalReport make_report(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                       std::size_t num_classes);

/// Index of the candidate with the highest validation accuracy. Ties prefer
/// a linear model, then the earlier candidate.
std::size_t select_model(const std::vector<Model>& candidates,
                         const SparseMatrix& x_val, std::span<const ClassId> y_val);

std::size_t num_features(const Model& model);
std::size_t num_classes(const Model& model);
std::string_view model_kind(const Model& model);

/// Gradient of the mean softmax cross-entropy over the given rows, laid out
/// like the model parameters.
struct MlpGradient {
  double loss = 0.0;
  std::vector<double> w1, b1, w2, b2;
};
MlpGradient mlp_loss_and_gradient(const MlpModel& model, const SparseMatrix& x,
                                  std::span<const ClassId> y);
double mlp_loss(const MlpModel& model, const SparseMatrix& x, std::span<const ClassId> y);

/// Mean regularized hinge objective of a linear model (one-vs-rest averaged).
double svm_objective(const LinearModel& model, const SparseMatrix& x,
                     std::span<const ClassId> y);

std::string model_to_json(const Model& model);
Model model_from_json(std::string_view text);
std::string report_to_json(const EvalReport& report,
                           const std::vector<std::string>& class_names);

}  // namespace lzwdl
