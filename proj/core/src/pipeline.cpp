#include "lzwdl/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lzwdl/dpm.hpp"
#include "lzwdl/mdlm.hpp"

namespace lzwdl {

std::string_view to_string(ClassifierChoice choice) {
  switch (choice) {
    case ClassifierChoice::Svm: return "svm";
    case ClassifierChoice::Mlp: return "mlp";
    case ClassifierChoice::Auto: return "auto";
  }
  return "auto";
}

ClassifierChoice parse_classifier(std::string_view text) {
  if (text == "svm") return ClassifierChoice::Svm;
  if (text == "mlp") return ClassifierChoice::Mlp;
  if (text == "auto") return ClassifierChoice::Auto;
  throw ConfigError("unknown classifier '" + std::string(text) +
                    "' (expected svm, mlp or auto)");
}

std::size_t PipelineConfig::effective_max_atom_len() const {
  return max_atom_len == 0 ? default_max_atom_len(level) : max_atom_len;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    T result{};
    if constexpr (std::is_floating_point_v<T>) {
      result = static_cast<T>(std::stod(value, &used));
    } else {
      if (!value.empty() && value.front() == '-') throw std::invalid_argument("negative");
      result = static_cast<T>(std::stoull(value, &used));
    }
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return result;
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<std::size_t>(key, item));
  }
  return out;
}

std::string join_list(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const GuardError& e) {
    throw StageError(name, ErrorKind::Guard, e.what());
  } catch (const std::exception& e) {
    throw StageError(name, ErrorKind::Data, e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

void apply_setting(PipelineConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  try {
    if (key == "dataset") c.dataset = value;
    else if (key == "text_column") c.text_column = value;
    else if (key == "label_column") c.label_column = value;
    else if (key == "level") c.level = parse_level(value);
    else if (key == "max_atom_len") c.max_atom_len = parse_number<std::size_t>(key, value);
    else if (key == "k") c.k = parse_list(key, value);
    else if (key == "k_sweep") c.k_sweep = parse_list(key, value);
    else if (key == "classifier") c.classifier = parse_classifier(value);
    else if (key == "svm_lambda") c.svm.lambda = parse_number<double>(key, value);
    else if (key == "svm_epochs") c.svm.epochs = parse_number<std::size_t>(key, value);
    else if (key == "mlp_hidden") c.mlp.hidden = parse_number<std::size_t>(key, value);
    else if (key == "mlp_lr") c.mlp.learning_rate = parse_number<double>(key, value);
    else if (key == "mlp_epochs") c.mlp.epochs = parse_number<std::size_t>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "test_fraction") c.test_fraction = parse_number<double>(key, value);
    else if (key == "val_fraction") c.val_fraction = parse_number<double>(key, value);
    else if (key == "max_samples") c.max_samples = parse_number<std::size_t>(key, value);
    else if (key == "ib_restarts") c.ib.restarts = parse_number<std::size_t>(key, value);
    else if (key == "ib_max_t") c.ib.max_t_cardinality = parse_number<std::size_t>(key, value);
    else if (key == "ib_tol") c.ib.tol = parse_number<double>(key, value);
    else if (key == "ib_max_x") c.ib.max_x_support = parse_number<std::size_t>(key, value);
    else if (key == "ipar_method") {
      if (value == "trapezoid") c.ipar_method = AreaMethod::Trapezoid;
      else if (value == "monte_carlo") c.ipar_method = AreaMethod::MonteCarlo;
      else throw ConfigError("ipar_method must be trapezoid or monte_carlo");
    } else if (key == "mc_samples") c.mc_samples = parse_number<std::size_t>(key, value);
    else if (key == "threads") c.threads = static_cast<unsigned>(parse_number<std::size_t>(key, value));
    else if (key == "out") c.out = value;
    else throw ConfigError("unknown configuration key '" + key + "'");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (key == "k" && (c.k.empty() || std::count(c.k.begin(), c.k.end(), 0))) {
    throw ConfigError("k must list one or more positive integers");
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  PipelineConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key=value");
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

std::map<std::string, std::string> config_to_map(const PipelineConfig& c) {
  return {
      {"dataset", c.dataset.string()},
      {"text_column", c.text_column},
      {"label_column", c.label_column},
      {"level", std::string(to_string(c.level))},
      {"max_atom_len", std::to_string(c.max_atom_len)},
      {"k", join_list(c.k)},
      {"k_sweep", join_list(c.k_sweep)},
      {"classifier", std::string(to_string(c.classifier))},
      {"svm_lambda", fmt_double(c.svm.lambda)},
      {"svm_epochs", std::to_string(c.svm.epochs)},
      {"mlp_hidden", std::to_string(c.mlp.hidden)},
      {"mlp_lr", fmt_double(c.mlp.learning_rate)},
      {"mlp_epochs", std::to_string(c.mlp.epochs)},
      {"seed", std::to_string(c.seed)},
      {"test_fraction", fmt_double(c.test_fraction)},
      {"val_fraction", fmt_double(c.val_fraction)},
      {"max_samples", std::to_string(c.max_samples)},
      {"ib_restarts", std::to_string(c.ib.restarts)},
      {"ib_max_t", std::to_string(c.ib.max_t_cardinality)},
      {"ib_tol", fmt_double(c.ib.tol)},
      {"ib_max_x", std::to_string(c.ib.max_x_support)},
      {"ipar_method", c.ipar_method == AreaMethod::Trapezoid ? "trapezoid" : "monte_carlo"},
      {"mc_samples", std::to_string(c.mc_samples)},
      {"threads", std::to_string(c.threads)},
      {"out", c.out.string()},
  };
}

namespace {

Model fit_one(ClassifierChoice kind, const SparseMatrix& x, std::span<const ClassId> y,
              std::size_t num_classes, const PipelineConfig& config) {
  if (kind == ClassifierChoice::Svm) {
    SvmParams p = config.svm;
    p.seed = config.seed;
    return fit_svm(x, y, num_classes, p);
  }
  MlpParams p = config.mlp;
  p.seed = config.seed;
  return fit_mlp(x, y, num_classes, p);
}

struct Selection {
  ClassifierChoice kind;
  double validation_accuracy;
};

// Fits the requested classifier kind(s) on `fit` and scores them on `val`.
Selection choose_classifier(ClassifierChoice requested, const SparseMatrix& x_fit,
                            const LabeledCorpus& fit, const SparseMatrix& x_val,
                            const LabeledCorpus& val, const PipelineConfig& config) {
  std::vector<ClassifierChoice> kinds;
  if (requested == ClassifierChoice::Auto) {
    kinds = {ClassifierChoice::Svm, ClassifierChoice::Mlp};
  } else {
    kinds = {requested};
  }
  std::vector<Model> candidates;
  for (const auto kind : kinds) {
    candidates.push_back(fit_one(kind, x_fit, fit.labels(), fit.num_classes(), config));
  }
  const std::size_t best = select_model(candidates, x_val, val.labels());
  return Selection{kinds[best], evaluate(candidates[best], x_val, val.labels()).accuracy};
}

}  // namespace

TrainResult cmd_train(const PipelineConfig& config, bool write_artifacts) {
  const auto started = std::chrono::steady_clock::now();
  if (config.k.empty()) throw ConfigError("no atom budget k given");

  const LabeledCorpus corpus = stage("load", [&] {
    return load_dataset(config.dataset, config.text_column, config.label_column, config.level);
  });
  const SplitResult parts = stage("split", [&] {
    return split(corpus, config.test_fraction, config.seed);
  });
  const LabeledCorpus& train = parts.train;
  const LabeledCorpus& test = parts.test;

  const Dictionary initial = stage("lzw", [&] {
    return build_dictionary(concatenate(train), config.level, config.effective_max_atom_len());
  });
  const Dictionary scored = stage("dpm", [&] { return score_dictionary(initial, train); });

  TrainMetrics metrics;
  metrics.initial_atoms = initial.size();
  metrics.train_samples = train.size();
  metrics.test_samples = test.size();

  // Validation side, used for k and classifier selection.
  const bool need_validation =
      config.k.size() > 1 || config.classifier == ClassifierChoice::Auto;
  std::optional<SplitResult> inner;
  if (need_validation) {
    inner = stage("validation split", [&] {
      return split(train, config.val_fraction, config.seed + 1);
    });
  }

  std::size_t k = config.k.front();
  std::optional<ClassifierChoice> chosen;
  if (config.k.size() > 1) {
    double best_acc = -1.0;
    for (const std::size_t candidate : config.k) {
      const auto sel = stage("k selection", [&] {
        const auto pruned = select_top_k(scored, std::min(candidate, scored.size()));
        const auto x_fit = encode_corpus(pruned, inner->train, config.threads);
        const auto x_val = encode_corpus(pruned, inner->test, config.threads);
        return choose_classifier(config.classifier, x_fit, inner->train, x_val, inner->test,
                                 config);
      });
      metrics.k_validation[candidate] = sel.validation_accuracy;
      if (sel.validation_accuracy > best_acc) {
        best_acc = sel.validation_accuracy;
        k = candidate;
        chosen = sel.kind;
      }
    }
  }
  if (k > scored.size()) {
    throw StageError("dpm", ErrorKind::Data,
                     "k = " + std::to_string(k) + " exceeds the " +
                         std::to_string(scored.size()) + "-atom LZW dictionary");
  }

  Dictionary pruned = stage("dpm", [&] { return select_top_k(scored, k); });
  const SparseMatrix x_train =
      stage("mdlm", [&] { return encode_corpus(pruned, train, config.threads); });
  const SparseMatrix x_test =
      stage("mdlm", [&] { return encode_corpus(pruned, test, config.threads); });

  if (!chosen) {
    if (config.classifier == ClassifierChoice::Auto) {
      chosen = stage("classifier selection", [&] {
        const auto x_fit = encode_corpus(pruned, inner->train, config.threads);
        const auto x_val = encode_corpus(pruned, inner->test, config.threads);
        return choose_classifier(config.classifier, x_fit, inner->train, x_val, inner->test,
                                 config)
            .kind;
      });
    } else {
      chosen = config.classifier;
    }
  }
  Model model = stage("classifier", [&] {
    return fit_one(*chosen, x_train, train.labels(), train.num_classes(), config);
  });
  const EvalReport test_report =
      stage("evaluate", [&] { return evaluate(model, x_test, test.labels()); });
  metrics.train_accuracy =
      stage("evaluate", [&] { return evaluate(model, x_train, train.labels()).accuracy; });
  metrics.test_accuracy = test_report.accuracy;
  metrics.atoms = pruned.size();
  metrics.model_kind = std::string(model_kind(model));
  metrics.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  TrainResult result{TrainedPipeline{std::move(pruned), std::move(model), corpus.class_names(),
                                     config, metrics},
                     test_report};
  if (write_artifacts) {
    stage("persist", [&] {
      std::filesystem::create_directories(config.out);
      save_pipeline(result.pipeline, config.out);
      write_text(config.out / "report.json",
                 report_to_json(test_report, result.pipeline.class_names));
      write_dispower_csv(result.pipeline.dictionary, result.pipeline.class_names,
                         config.out / "dispower.csv");
      write_jsonl(train, config.out / "train.jsonl");
      write_jsonl(test, config.out / "test.jsonl");
      return 0;
    });
  }
  return result;
}

AnalyzeResult analyze_corpus(const LabeledCorpus& corpus, const PipelineConfig& config) {
  AnalyzeResult result;
  result.samples = corpus.size();
  const Dictionary initial = stage("lzw", [&] {
    return build_dictionary(concatenate(corpus), config.level, config.effective_max_atom_len());
  });
  result.initial_atoms = initial.size();
  const Dictionary scored = stage("dpm", [&] { return score_dictionary(initial, corpus); });
  auto ks = config.k_sweep.empty() ? default_k_sweep(scored.size()) : config.k_sweep;
  for (auto& k : ks) k = std::min(k, scored.size());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  result.trajectory = stage("trajectory", [&] {
    return trajectory(corpus, scored, ks, [&](const Dictionary& d, const LabeledCorpus& c) {
      return encode_corpus(d, c, config.threads);
    });
  });
  result.boundary = stage("ib boundary", [&] {
    IbOptions options = config.ib;
    options.seed = config.seed;
    return ib_boundary(empirical_joint(corpus), options);
  });
  result.ipar = stage("ipar", [&] {
    return ipar(result.boundary, result.trajectory, config.ipar_method, config.mc_samples,
                config.seed);
  });
  result.gaps = constrained_gap_check(result.boundary, result.trajectory);
  return result;
}

AnalyzeResult cmd_analyze(const PipelineConfig& config, bool write_artifacts) {
  const LabeledCorpus corpus = stage("load", [&] {
    return load_dataset(config.dataset, config.text_column, config.label_column, config.level);
  });
  const SplitResult parts = stage("split", [&] {
    return split(corpus, config.test_fraction, config.seed);
  });
  const LabeledCorpus sample = stage("subsample", [&] {
    return stratified_subsample(parts.train, config.max_samples, config.seed);
  });
  AnalyzeResult result = analyze_corpus(sample, config);
  if (write_artifacts) {
    stage("persist", [&] {
      std::filesystem::create_directories(config.out);
      write_trajectory_csv(result.trajectory, config.out / "trajectory.csv");
      write_boundary_csv(result.boundary, config.out / "boundary.csv");
      write_text(config.out / "ipar.json", ipar_to_json(result.ipar));
      return 0;
    });
  }
  if (!result.gaps.feasible) {
    throw StageError("feasibility check", ErrorKind::Guard,
                     "a trajectory point lies above the IB boundary (min gap " +
                         fmt_double(result.gaps.min_gap) + " bits)");
  }
  return result;
}

void save_pipeline(const TrainedPipeline& pipeline, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dictionary(pipeline.dictionary, dir / "dictionary.json");
  write_text(dir / "model.json", model_to_json(pipeline.model));
  nlohmann::ordered_json doc;
  doc["level"] = std::string(to_string(pipeline.dictionary.level()));
  doc["class_names"] = pipeline.class_names;
  nlohmann::ordered_json cfg;
  for (const auto& [key, value] : config_to_map(pipeline.config)) cfg[key] = value;
  doc["config"] = cfg;
  const auto& m = pipeline.metrics;
  doc["metrics"] = {{"initial_atoms", m.initial_atoms},
                    {"atoms", m.atoms},
                    {"train_samples", m.train_samples},
                    {"test_samples", m.test_samples},
                    {"train_accuracy", m.train_accuracy},
                    {"test_accuracy", m.test_accuracy},
                    {"model_kind", m.model_kind}};
  nlohmann::ordered_json kval = nlohmann::ordered_json::object();
  for (const auto& [k, acc] : m.k_validation) kval[std::to_string(k)] = acc;
  doc["metrics"]["k_validation"] = kval;
  write_text(dir / "pipeline.json", doc.dump(2));
}

TrainedPipeline load_pipeline(const std::filesystem::path& dir) {
  Dictionary dict = load_dictionary(dir / "dictionary.json");
  Model model = model_from_json(read_text(dir / "model.json"));
  try {
    const auto doc = nlohmann::json::parse(read_text(dir / "pipeline.json"));
    PipelineConfig config;
    for (const auto& [key, value] : doc.at("config").items()) {
      const auto text = value.get<std::string>();
      // Empty lists are the "use defaults" state and are not valid input.
      if (text.empty() && (key == "k_sweep" || key == "dataset")) continue;
      apply_setting(config, key, text);
    }
    TrainMetrics metrics;
    const auto& m = doc.at("metrics");
    metrics.initial_atoms = m.at("initial_atoms").get<std::size_t>();
    metrics.atoms = m.at("atoms").get<std::size_t>();
    metrics.train_samples = m.at("train_samples").get<std::size_t>();
    metrics.test_samples = m.at("test_samples").get<std::size_t>();
    metrics.train_accuracy = m.at("train_accuracy").get<double>();
    metrics.test_accuracy = m.at("test_accuracy").get<double>();
    metrics.model_kind = m.at("model_kind").get<std::string>();
    for (const auto& [k, acc] : m.at("k_validation").items()) {
      metrics.k_validation[std::stoul(k)] = acc.get<double>();
    }
    auto class_names = doc.at("class_names").get<std::vector<std::string>>();
    if (parse_level(doc.at("level").get<std::string>()) != dict.level()) {
      throw DataError("pipeline level does not match its dictionary");
    }
    if (num_features(model) != dict.size() || num_classes(model) != class_names.size()) {
      throw DataError("model shape does not match dictionary size or class count");
    }
    return TrainedPipeline{std::move(dict), std::move(model), std::move(class_names),
                           std::move(config), std::move(metrics)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed pipeline.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad config snapshot in pipeline.json: ") + e.what());
  }
}

std::vector<std::string> cmd_predict(const TrainedPipeline& pipeline,
                                     const std::vector<std::string>& texts) {
  SparseMatrix x;
  x.cols = pipeline.dictionary.size();
  x.rows.reserve(texts.size());
  for (const auto& text : texts) {
    const auto tokens = tokenize(text, pipeline.dictionary.level());
    x.rows.push_back(encode_tokens(pipeline.dictionary, tokens).active);
  }
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const ClassId label : predict(pipeline.model, x)) {
    out.push_back(pipeline.class_names.at(label));
  }
  return out;
}

std::vector<std::string> cmd_predict(const std::filesystem::path& model_dir,
                                     const std::vector<std::string>& texts) {
  const auto pipeline = stage("load model", [&] { return load_pipeline(model_dir); });
  return stage("predict", [&] { return cmd_predict(pipeline, texts); });
}

std::string cmd_inspect(const Dictionary& scored, std::size_t top_n,
                        const std::vector<std::string>& class_names) {
  if (!scored.has_scores()) {
    throw DataError("dictionary has no dispower statistics; run train first");
  }
  const std::size_t num_classes = scored.scores().front().class_counts.size();
  std::ostringstream out;
  out << "rank\tatom";
  for (std::size_t c = 0; c < num_classes; ++c) {
    out << '\t' << (c < class_names.size() ? class_names[c] : "class_" + std::to_string(c));
  }
  out << "\tdispower\n";
  const auto order = rank_by_dispower(scored);
  const std::size_t n = std::min(top_n, order.size());
  for (std::size_t r = 0; r < n; ++r) {
    const AtomId id = order[r];
    std::string shown;
    for (const char ch : scored.render(id)) {
      if (ch == '\n') shown += "\\n";
      else if (ch == '\t') shown += "\\t";
      else if (ch == '\r') shown += "\\r";
      else shown += ch;
    }
    out << (r + 1) << "\t\"" << shown << '"';
    for (const auto count : scored.scores()[id].class_counts) out << '\t' << count;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", scored.scores()[id].dispower);
    out << '\t' << buf << '\n';
  }
  return out.str();
}

std::string cmd_inspect(const std::filesystem::path& dictionary_path, std::size_t top_n) {
  const Dictionary dict = load_dictionary(dictionary_path);
  std::vector<std::string> names;
  const auto meta = dictionary_path.parent_path() / "pipeline.json";
  if (std::filesystem::exists(meta)) {
    try {
      names = nlohmann::json::parse(read_text(meta))
                  .at("class_names")
                  .get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      names.clear();
    }
  }
  return cmd_inspect(dict, top_n, names);
}

}  // namespace lzwdl
