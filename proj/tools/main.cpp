#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lzwdl/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitGuard = 3;

struct CommonFlags {
  std::string config;
  std::string dataset;
  std::string level;
  std::string k;
  std::string classifier;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key=value configuration file");
  cmd->add_option("--dataset", f.dataset, "CSV file with text and label columns");
  cmd->add_option("--level", f.level, "tokenization level")
      ->check(CLI::IsMember({"char", "word"}));
  cmd->add_option("--k", f.k, "atom budget; a comma list selects k by validation");
  cmd->add_option("--classifier", f.classifier, "classifier")
      ->check(CLI::IsMember({"svm", "mlp", "auto"}));
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output directory");
}

lzwdl::PipelineConfig resolve(const CommonFlags& f, const std::vector<std::string>& sets) {
  lzwdl::PipelineConfig config;
  if (!f.config.empty()) config = lzwdl::load_config(f.config);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw lzwdl::ConfigError("--set expects key=value, got " + kv);
    lzwdl::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!f.dataset.empty()) lzwdl::apply_setting(config, "dataset", f.dataset);
  if (!f.level.empty()) lzwdl::apply_setting(config, "level", f.level);
  if (!f.k.empty()) {
    lzwdl::apply_setting(config, "k", f.k);
    lzwdl::apply_setting(config, "k_sweep", f.k);
  }
  if (!f.classifier.empty()) lzwdl::apply_setting(config, "classifier", f.classifier);
  if (f.seed) config.seed = *f.seed;
  if (!f.out.empty()) config.out = f.out;
  if (config.dataset.empty()) throw lzwdl::ConfigError("no dataset given (--dataset or config)");
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dictionary-learning text classifier built on LZW atoms"};
  app.require_subcommand(1);

  CommonFlags train_flags, analyze_flags;
  std::vector<std::string> train_sets, analyze_sets;

  auto* train = app.add_subcommand("train", "learn dictionary and classifier, write artifacts");
  add_common(train, train_flags);
  train->add_option("--set", train_sets, "extra key=value overrides");

  auto* analyze = app.add_subcommand("analyze", "information-plane trajectory, boundary and IPAR");
  add_common(analyze, analyze_flags);
  analyze->add_option("--set", analyze_sets, "extra key=value overrides");

  std::string model_dir;
  std::string input_path;
  std::vector<std::string> texts;
  auto* predict = app.add_subcommand("predict", "classify texts with a trained pipeline");
  predict->add_option("--model", model_dir, "directory written by train")->required();
  predict->add_option("--input", input_path, "file with one text per line ('-' for stdin)");
  predict->add_option("texts", texts, "texts to classify");

  std::string dictionary_path;
  std::size_t top_n = 20;
  auto* inspect = app.add_subcommand("inspect", "list atoms with the highest discriminative power");
  inspect->add_option("dictionary", dictionary_path, "dictionary.json from train")->required();
  inspect->add_option("-n,--top", top_n, "number of atoms to show");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) {
      const auto config = resolve(train_flags, train_sets);
      const auto result = lzwdl::cmd_train(config);
      const auto& m = result.pipeline.metrics;
      std::printf("initial atoms %zu, selected %zu, classifier %s\n", m.initial_atoms, m.atoms,
                  m.model_kind.c_str());
      std::printf("train accuracy %.4f, test accuracy %.4f (%zu test samples)\n",
                  m.train_accuracy, m.test_accuracy, m.test_samples);
      std::printf("artifacts in %s (%.1f s)\n", config.out.string().c_str(), m.seconds);
    } else if (*analyze) {
      const auto config = resolve(analyze_flags, analyze_sets);
      const auto result = lzwdl::cmd_analyze(config);
      std::printf("samples %zu, initial atoms %zu, trajectory points %zu\n", result.samples,
                  result.initial_atoms, result.trajectory.size());
      std::printf("I(X;Y) %.6f bits, IPAR %.6f, min gap %.3g\n",
                  result.boundary.mutual_information, result.ipar.ipar, result.gaps.min_gap);
      std::printf("artifacts in %s\n", config.out.string().c_str());
    } else if (*predict) {
      if (!input_path.empty()) {
        std::string line;
        if (input_path == "-") {
          while (std::getline(std::cin, line)) texts.push_back(line);
        } else {
          std::ifstream in(input_path);
          if (!in) throw lzwdl::DataError("cannot open " + input_path);
          while (std::getline(in, line)) texts.push_back(line);
        }
      }
      for (const auto& label : lzwdl::cmd_predict(model_dir, texts)) {
        std::printf("%s\n", label.c_str());
      }
    } else if (*inspect) {
      std::fputs(lzwdl::cmd_inspect(dictionary_path, top_n).c_str(), stdout);
    }
  } catch (const lzwdl::ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const lzwdl::StageError& e) {
    std::fprintf(stderr, "%s: %s\n",
                 e.kind() == lzwdl::ErrorKind::Guard ? "guard violation" : "error", e.what());
    if (e.kind() == lzwdl::ErrorKind::Guard) {
      std::fprintf(stderr, "hint: lower max_samples to subsample the corpus\n");
      return kExitGuard;
    }
    return kExitData;
  } catch (const lzwdl::GuardError& e) {
    std::fprintf(stderr, "guard violation: %s\n", e.what());
    return kExitGuard;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitOk;
}
