#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lzwdl/classifier.hpp"
#include "lzwdl/corpus.hpp"
#include "lzwdl/infotheory.hpp"
#include "lzwdl/lzw.hpp"

namespace lzwdl {

enum class ClassifierChoice { Svm, Mlp, Auto };

std::string_view to_string(ClassifierChoice choice);
ClassifierChoice parse_classifier(std::string_view text);

/// Every knob of a pipeline run. Loaded from a flat key=value file; CLI flags
/// override individual keys.
struct PipelineConfig {
  std::filesystem::path dataset;
  std::string text_column = "text";
  std::string label_column = "label";
  Level level = Level::Char;
  std::size_t max_atom_len = 0;  // 0: level default
  // Atom budget. More than one value: pick by validation accuracy.
  std::vector<std::size_t> k{23};
  std::vector<std::size_t> k_sweep;  // empty: 2, 4, 8, ... up to |D|
  ClassifierChoice classifier = ClassifierChoice::Auto;
  SvmParams svm;
  MlpParams mlp;
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  double val_fraction = 0.1;
  std::size_t max_samples = 4096;  // analyze: training-side subsample
  IbOptions ib;
  AreaMethod ipar_method = AreaMethod::Trapezoid;
  std::size_t mc_samples = 100000;
  unsigned threads = 0;
  std::filesystem::path out = "out";

  std::size_t effective_max_atom_len() const;
};

/// Malformed configuration or flags. Maps to the usage-error exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Applies one key=value setting; throws ConfigError for unknown keys or
/// unparsable values.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);
PipelineConfig load_config(const std::filesystem::path& path);
std::map<std::string, std::string> config_to_map(const PipelineConfig& config);

enum class ErrorKind { Data, Guard };

/// Failure inside a pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)), kind_(kind) {}
  const std::string& stage() const { return stage_; }
  ErrorKind kind() const { return kind_; }

 private:
  std::string stage_;
  ErrorKind kind_;
};

struct TrainMetrics {
  std::size_t initial_atoms = 0;
  std::size_t atoms = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::string model_kind;
  // Validation accuracy per candidate k (only when k had several values).
  std::map<std::size_t, double> k_validation;
  double seconds = 0.0;
};

/// Deployable unit: pruned dictionary with statistics plus classifier.
struct TrainedPipeline {
  Dictionary dictionary;
  Model model;
  std::vector<std::string> class_names;
  PipelineConfig config;
  TrainMetrics metrics;
};

struct TrainResult {
  TrainedPipeline pipeline;
  EvalReport test_report;
};

/// load -> split -> concatenate -> LZW -> dispower pruning -> MDLM coding ->
/// classifier -> evaluation. Writes dictionary.json, model.json,
/// pipeline.json, report.json, dispower.csv and the train/test snapshots to
/// config.out (skipped when write_artifacts is false).
TrainResult cmd_train(const PipelineConfig& config, bool write_artifacts = true);

struct AnalyzeResult {
  std::size_t samples = 0;
  std::size_t initial_atoms = 0;
  InfoTrajectory trajectory;
  IbBoundary boundary;
  IparReport ipar;
  GapReport gaps;
};

/// Information-plane analysis of the training side: trajectory over the
/// k sweep, IB frontier of the empirical joint, IPAR and the feasibility
/// check. Writes trajectory.csv, boundary.csv and ipar.json. Throws a Guard
/// StageError when a trajectory point lies above the frontier.
AnalyzeResult cmd_analyze(const PipelineConfig& config, bool write_artifacts = true);

/// Analysis on an already-prepared corpus (no loading or splitting).
AnalyzeResult analyze_corpus(const LabeledCorpus& corpus, const PipelineConfig& config);

void save_pipeline(const TrainedPipeline& pipeline, const std::filesystem::path& dir);
TrainedPipeline load_pipeline(const std::filesystem::path& dir);

/// Tokenize, code against the pipeline dictionary and classify. Returns class
/// names, one per input text.
std::vector<std::string> cmd_predict(const TrainedPipeline& pipeline,
                                     const std::vector<std::string>& texts);
std::vector<std::string> cmd_predict(const std::filesystem::path& model_dir,
                                     const std::vector<std::string>& texts);

/// Top-n atoms by dispower as a tab-separated table with a header row.
std::string cmd_inspect(const Dictionary& scored, std::size_t top_n,
                        const std::vector<std::string>& class_names = {});
std::string cmd_inspect(const std::filesystem::path& dictionary_path, std::size_t top_n);

}  // namespace lzwdl
