#include "dolfin/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "dolfin/checkpoint.hpp"
#include "dolfin/error.hpp"
#include "dolfin/interpret.hpp"
#include "json.hpp"

namespace dolfin {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct PreparedData {
  DatasetSplits splits;
  Vocab vocab;
};

PreparedData prepare_data(const std::string& dataset, const fs::path& data_dir, std::size_t subsample_size,
                          std::uint64_t subsample_seed) {
  if (data_dir.empty()) {
    throw UsageError("no data directory: pass --data-dir or set DOLFIN_DATA_DIR");
  }
  PreparedData out;
  out.splits = load_dataset(dataset, data_dir);
  if (subsample_size > 0) out.splits = subsample(out.splits, subsample_size, subsample_seed);
  out.vocab = build_vocab(out.splits);
  return out;
}

const std::vector<Example>& pick_split(const DatasetSplits& data, const std::string& name) {
  if (name == "train") return data.train;
  if (name == "dev") return data.dev;
  if (name == "test") return data.test;
  throw UsageError("unknown split '" + name + "' (expected train, dev or test)");
}

std::string require_dataset(const RunConfig& cfg) {
  if (!cfg.dataset) throw UsageError(cfg.command + ": --dataset is required");
  return *cfg.dataset;
}

ModelConfig model_config(const RunConfig& cfg, const PreparedData& data) {
  ModelConfig mc;
  mc.architecture = parse_architecture(cfg.model.value_or("dolfin-conv"));
  mc.vocab_size = data.vocab.size();
  mc.embedding_dim = cfg.embedding_dim;
  mc.encoder.kind = encoder_kind(mc.architecture);
  mc.encoder.filters_per_size = cfg.filters_per_size;
  mc.encoder.lstm_hidden = cfg.lstm_hidden;
  mc.latent_features = cfg.latent.value_or(default_latent_features(data.splits.name));
  mc.text_dim = cfg.text_dim;
  mc.categories = data.splits.categories.size();
  mc.dropout = cfg.train.dropout;
  mc.validate();
  return mc;
}

json train_settings(const TrainConfig& tc) {
  return {{"lr", tc.lr},           {"batch", tc.batch},           {"patience", tc.patience},
          {"dropout", tc.dropout}, {"max_epochs", tc.max_epochs}, {"seed", tc.seed}};
}

json history_json(const TrainResult& result) {
  json rows = json::array();
  for (const auto& e : result.history) {
    rows.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"dev_accuracy", e.dev_accuracy},
                    {"best_dev_accuracy", e.best_dev_accuracy}});
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string run_stem(const std::string& dataset, const ModelConfig& mc, std::uint64_t seed) {
  return dataset + "-" + to_string(mc.architecture) + "-seed" + std::to_string(seed);
}

template <typename T>
TrainRun train_one(const RunConfig& cfg, const PreparedData& data, const EmbeddingMatrix* glove,
                   std::uint64_t seed, std::ostream& log) {
  const ModelConfig mc = model_config(cfg, data);
  Rng rng(seed);
  TextClassifier<T> model(mc, rng);
  if (glove != nullptr) {
    const auto src = glove->vectors.data();
    auto dst = model.embedding().data();
    std::transform(src.begin(), src.end(), dst.begin(), [](float v) { return static_cast<T>(v); });
  }

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  const EncodedCorpus train_set = encode_corpus(data.splits.train, data.vocab);
  const EncodedCorpus dev_set = encode_corpus(data.splits.dev, data.vocab);
  const EncodedCorpus test_set = encode_corpus(data.splits.test, data.vocab);

  TrainRun run;
  run.seed = seed;
  run.result = train(model, train_set, dev_set, tc, &log);
  run.dev_accuracy = evaluate_accuracy(model, dev_set);
  run.test_accuracy = evaluate_accuracy(model, test_set);

  const std::string stem = run_stem(data.splits.name, mc, seed);
  run.checkpoint = cfg.checkpoint.empty() ? cfg.report_dir / (stem + ".ckpt") : cfg.checkpoint;
  run.metrics = cfg.report_dir / (stem + ".metrics.json");

  CheckpointInfo info;
  info.model = mc;
  info.dataset = data.splits.name;
  info.categories = data.splits.categories;
  info.vocab_hash = data.vocab.hash();
  info.vocab_size = data.vocab.size();
  info.run = {{"train", train_settings(tc)},
              {"subsample", cfg.subsample},
              {"subsample_seed", cfg.subsample_seed},
              {"embeddings", glove != nullptr ? "glove" : "random"}};
  save_checkpoint(run.checkpoint, model, info);

  json metrics = {{"dataset", data.splits.name},
                  {"model", to_string(mc.architecture)},
                  {"precision", cfg.precision},
                  {"seed", seed},
                  {"model_config", model_config_to_json(mc)},
                  {"train_config", train_settings(tc)},
                  {"subsample", cfg.subsample},
                  {"subsample_seed", cfg.subsample_seed},
                  {"embeddings", glove != nullptr ? "glove" : "random"},
                  {"train_size", data.splits.train.size()},
                  {"dev_size", data.splits.dev.size()},
                  {"test_size", data.splits.test.size()},
                  {"vocab_size", data.vocab.size()},
                  {"best_epoch", run.result.best_epoch},
                  {"stopped_early", run.result.stopped_early},
                  {"dev_accuracy", run.dev_accuracy},
                  {"test_accuracy", run.test_accuracy},
                  {"history", history_json(run.result)}};
  if (glove != nullptr) metrics["glove_coverage"] = glove->coverage(data.vocab.size());
  write_text(run.metrics, metrics.dump(2) + "\n");
  return run;
}

struct LoadedCheckpoint {
  CheckpointInfo info;
  PreparedData data;
};

LoadedCheckpoint open_checkpoint(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw UsageError(cfg.command + ": --checkpoint is required");
  LoadedCheckpoint out;
  out.info = read_checkpoint_info(cfg.checkpoint);
  const CheckpointInfo& info = out.info;
  if (cfg.dataset && *cfg.dataset != info.dataset) {
    throw DataError("checkpoint mismatch: " + cfg.checkpoint.string() + " was trained on '" + info.dataset +
                    "', not '" + *cfg.dataset + "'");
  }
  if (cfg.model && parse_architecture(*cfg.model) != info.model.architecture) {
    throw DataError("checkpoint mismatch: " + cfg.checkpoint.string() + " holds a " +
                    to_string(info.model.architecture) + " model, not " + *cfg.model);
  }
  if (cfg.latent && is_dolfin(info.model.architecture) && *cfg.latent != info.model.latent_features) {
    throw DataError("checkpoint mismatch: " + std::to_string(info.model.latent_features) +
                    " latent features, not " + std::to_string(*cfg.latent));
  }
  const std::size_t sub = info.run.value("subsample", std::size_t{0});
  const std::uint64_t sub_seed = info.run.value("subsample_seed", std::uint64_t{1});
  out.data = prepare_data(info.dataset, cfg.data_dir, sub, sub_seed);
  if (out.data.splits.categories != info.categories) {
    throw DataError("checkpoint mismatch: category labels differ from the " + info.dataset + " data");
  }
  if (out.data.vocab.hash() != info.vocab_hash || out.data.vocab.size() != info.vocab_size) {
    throw DataError("checkpoint mismatch: vocabulary of " + std::to_string(out.data.vocab.size()) +
                    " words does not match the checkpoint's " + std::to_string(info.vocab_size));
  }
  return out;
}

template <typename T>
EvalOutcome eval_as(const RunConfig& cfg, const LoadedCheckpoint& ck) {
  const TextClassifier<T> model = load_checkpoint<T>(cfg.checkpoint);
  EvalOutcome out;
  out.split = cfg.split.value_or("test");
  const EncodedCorpus corpus = encode_corpus(pick_split(ck.data.splits, out.split), ck.data.vocab);
  const auto predicted = predict_corpus(model, corpus);
  out.total = corpus.size();
  for (std::size_t i = 0; i < out.total; ++i) out.correct += predicted[i] == corpus.labels[i];
  out.accuracy = evaluate_accuracy(model, corpus);
  return out;
}

/// Support estimation and mixing run in double precision whatever the stored dtype.
template <typename T>
InterpretOutcome interpret_as(const RunConfig& cfg, const LoadedCheckpoint& ck) {
  const TextClassifier<T> model = load_checkpoint<T>(cfg.checkpoint);
  if (!is_dolfin(model.architecture())) {
    throw UsageError("interpret: " + to_string(model.architecture()) +
                     " has no latent features; use dolfin-conv or dolfin-bilstm");
  }
  const PreparedData& data = ck.data;
  const EncodedCorpus dev = encode_corpus(data.splits.dev, data.vocab);
  const FeatureSupportTable table =
      estimate_feature_support(model, dev.texts, data.splits.categories, cfg.delta);

  std::vector<std::string> words;
  std::string stem;
  if (cfg.text) {
    words = tokenize(*cfg.text);
    stem = "interpret-text";
  } else {
    const std::string split = cfg.split.value_or("dev");
    const auto& examples = pick_split(data.splits, split);
    if (cfg.index >= examples.size()) {
      throw UsageError("interpret: index " + std::to_string(cfg.index) + " outside the " +
                       std::to_string(examples.size()) + " " + split + " examples");
    }
    words = examples[cfg.index].tokens;
    stem = "interpret-" + split + "-" + std::to_string(cfg.index);
  }
  if (words.empty()) throw UsageError("interpret: empty input text");

  const std::vector<std::int32_t> ids = data.vocab.encode(words);
  InterpretOutcome out;
  for (const auto& w : words) out.text += (out.text.empty() ? "" : " ") + w;
  const WordSupport ws = word_support(model, table, ids, std::move(words));
  out.predicted = ws.predicted;
  const ReportFormat format = parse_report_format(cfg.format);
  out.report = cfg.report_dir / (stem + (format == ReportFormat::html ? ".html" : ".txt"));
  out.table = cfg.report_dir / "feature_support.json";
  write_text(out.report, render_report(ws, table, format));
  write_text(out.table, table.to_json().dump(2) + "\n");
  return out;
}

}  // namespace

std::size_t default_latent_features(const std::string& dataset) {
  if (dataset == "trec") return 20;
  if (dataset == "sst2") return 10;
  if (dataset == "agnews") return 100;
  throw UsageError("unknown dataset '" + dataset + "'");
}

TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& log) {
  if (cfg.runs == 0) throw UsageError("train: --runs must be positive");
  if (cfg.runs > 1 && !cfg.checkpoint.empty()) {
    throw UsageError("train: --checkpoint names a single file; omit it when --runs > 1");
  }
  cfg.train.validate();
  const PreparedData data = prepare_data(require_dataset(cfg), cfg.data_dir, cfg.subsample, cfg.subsample_seed);
  log << data.splits.name << ": " << data.splits.train.size() << " train, " << data.splits.dev.size()
      << " dev, " << data.splits.test.size() << " test, vocabulary " << data.vocab.size() << '\n';

  std::optional<EmbeddingMatrix> glove;
  if (!cfg.glove.empty()) {
    Rng rng(cfg.seed);
    glove = load_glove_subset(cfg.glove, data.vocab, cfg.embedding_dim, rng);
    log << "glove coverage " << glove->coverage(data.vocab.size()) << '\n';
  }

  TrainOutcome out;
  std::vector<double> test_accuracies;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = cfg.seed + r;
    const EmbeddingMatrix* emb = glove ? &*glove : nullptr;
    TrainRun run = cfg.precision == "f64" ? train_one<double>(cfg, data, emb, seed, log)
                                          : train_one<float>(cfg, data, emb, seed, log);
    log << "seed " << seed << " dev_acc " << run.dev_accuracy << " test_acc " << run.test_accuracy
        << " checkpoint " << run.checkpoint.string() << '\n';
    test_accuracies.push_back(run.test_accuracy);
    out.runs.push_back(std::move(run));
  }
  out.test_summary = summarize_runs(test_accuracies);
  if (cfg.runs > 1) {
    json seeds = json::array();
    for (const auto& run : out.runs) {
      seeds.push_back({{"seed", run.seed}, {"dev_accuracy", run.dev_accuracy}, {"test_accuracy", run.test_accuracy}});
    }
    const std::string model = to_string(parse_architecture(cfg.model.value_or("dolfin-conv")));
    out.summary = cfg.report_dir / (data.splits.name + "-" + model + ".summary.json");
    write_text(out.summary, json{{"dataset", data.splits.name},
                                 {"model", model},
                                 {"runs", seeds},
                                 {"test_accuracy_mean", out.test_summary.mean},
                                 {"test_accuracy_std", out.test_summary.stddev}}
                                    .dump(2) +
                                "\n");
    log << "test_acc mean " << out.test_summary.mean << " std " << out.test_summary.stddev << '\n';
  }
  return out;
}

EvalOutcome cmd_eval(const RunConfig& cfg) {
  const LoadedCheckpoint ck = open_checkpoint(cfg);
  return ck.info.dtype == "f64" ? eval_as<double>(cfg, ck) : eval_as<float>(cfg, ck);
}

InterpretOutcome cmd_interpret(const RunConfig& cfg) {
  if (cfg.text && tokenize(*cfg.text).empty()) throw UsageError("interpret: empty input text");
  return interpret_as<double>(cfg, open_checkpoint(cfg));
}

GradCheckReport cmd_gradcheck(const RunConfig& cfg, std::ostream& out, const std::vector<GradCheckCase>& extra) {
  std::vector<GradCheckCase> cases = standard_gradcheck_cases();
  cases.insert(cases.end(), extra.begin(), extra.end());
  const GradCheckReport report = run_gradcheck_suite(cases, 5, cfg.seed, 1e-4);
  print_gradcheck_report(out, report);
  return report;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::vector<GradCheckCase>& extra_gradchecks) {
  CLI::App app{"Text classifiers with a bag of latent features and per-word category support", "dolfin"};
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "File of key = value lines; command-line flags take precedence");

  RunConfig cfg;
  app.add_option("--dataset", cfg.dataset, "trec, sst2 or agnews")
      ->check(CLI::IsMember({"trec", "sst2", "agnews"}));
  app.add_option("--model", cfg.model, "cnn, bilstm, dolfin-conv or dolfin-bilstm")
      ->check(CLI::IsMember({"cnn", "bilstm", "dolfin-conv", "dolfin-bilstm"}));
  app.add_option("--d", cfg.latent, "Latent features (default 20 trec, 10 sst2, 100 agnews)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Random seed of the first run")->capture_default_str();
  app.add_option("--runs", cfg.runs, "Consecutive seeds to train")->capture_default_str();
  app.add_option("--data-dir", cfg.data_dir, "Dataset root holding trec/, sst2/, agnews/")
      ->envname("DOLFIN_DATA_DIR");
  app.add_option("--glove", cfg.glove, "GloVe text file; random embeddings when omitted");
  app.add_option("--checkpoint", cfg.checkpoint, "Checkpoint file to write (train) or read");
  app.add_option("--report-dir", cfg.report_dir, "Directory for metrics, checkpoints and reports")
      ->capture_default_str();
  app.add_option("--emb-dim", cfg.embedding_dim, "Word vector size")->capture_default_str();
  app.add_option("--filters-per-size", cfg.filters_per_size, "Conv filters per width 3, 4, 5")
      ->capture_default_str();
  app.add_option("--lstm-hidden", cfg.lstm_hidden, "BiLSTM state size per direction")->capture_default_str();
  app.add_option("--text-dim", cfg.text_dim, "Size of the text vector s")->capture_default_str();
  app.add_option("--subsample", cfg.subsample, "Training rows to keep (0 keeps all)")->capture_default_str();
  app.add_option("--subsample-seed", cfg.subsample_seed, "Seed of the subsample draw")->capture_default_str();
  app.add_option("--lr", cfg.train.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--batch", cfg.train.batch, "Minibatch size")->capture_default_str();
  app.add_option("--patience", cfg.train.patience, "Epochs without dev improvement before stopping")
      ->capture_default_str();
  app.add_option("--dropout", cfg.train.dropout, "Dropout rate on the text vector")->capture_default_str();
  app.add_option("--max-epochs", cfg.train.max_epochs, "Epoch cap")->capture_default_str();
  app.add_option("--precision", cfg.precision, "f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  app.add_option("--delta", cfg.delta, "Feature firing threshold for support estimation")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--split", cfg.split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
  app.add_option("--text", cfg.text, "Text to interpret instead of a dataset example");
  app.add_option("--index", cfg.index, "Example index within --split")->capture_default_str();
  app.add_option("--format", cfg.format, "html or ansi")
      ->check(CLI::IsMember({"html", "ansi"}))
      ->capture_default_str();

  app.add_subcommand("train", "Train and write checkpoint plus metrics");
  app.add_subcommand("eval", "Accuracy of a checkpoint on a split");
  app.add_subcommand("interpret", "Per-word category support report");
  app.add_subcommand("gradcheck", "Finite-difference check of every op and classifier");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "dolfin: " << e.what() << '\n';
    return 1;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (cfg.command == "train") {
      cmd_train(cfg, out);
    } else if (cfg.command == "eval") {
      const EvalOutcome r = cmd_eval(cfg);
      out << r.split << " accuracy " << r.accuracy << " (" << r.correct << "/" << r.total << ")\n";
    } else if (cfg.command == "interpret") {
      const InterpretOutcome r = cmd_interpret(cfg);
      out << "predicted " << r.predicted << "\nreport " << r.report.string() << "\ntable " << r.table.string()
          << '\n';
    } else {
      if (!cmd_gradcheck(cfg, out, extra_gradchecks).passed) return 3;
    }
  } catch (const UsageError& e) {
    err << "dolfin: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "dolfin: numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "dolfin: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace dolfin
