#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dolfin/gradcheck_suite.hpp"
#include "dolfin/training.hpp"

namespace dolfin {

/// Every setting of a command, one field per flag.
struct RunConfig {
  std::string command;
  std::optional<std::string> dataset;  // trec, sst2 or agnews
  std::optional<std::string> model;    // cnn, bilstm, dolfin-conv or dolfin-bilstm
  std::optional<std::size_t> latent;   // d; 20 / 10 / 100 for trec / sst2 / agnews
  std::uint64_t seed = 1;
  std::size_t runs = 1;

  std::filesystem::path data_dir;
  std::filesystem::path glove;  // empty: random embeddings
  std::filesystem::path checkpoint;
  std::filesystem::path report_dir = "runs";

  std::size_t embedding_dim = 300;
  std::size_t filters_per_size = 100;
  std::size_t lstm_hidden = 100;
  std::size_t text_dim = 100;
  std::size_t subsample = 0;  // 0 keeps the full training split
  std::uint64_t subsample_seed = 1;

  TrainConfig train;
  std::string precision = "f32";

  double delta = 0.5;
  std::optional<std::string> split;  // eval: test, interpret: dev
  std::optional<std::string> text;
  std::size_t index = 0;
  std::string format = "html";
};

std::size_t default_latent_features(const std::string& dataset);

struct TrainRun {
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
  TrainResult result;
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainOutcome {
  std::vector<TrainRun> runs;
  RunSummary test_summary;
  std::filesystem::path summary;  // written when more than one run
};

/// Trains seeds seed .. seed + runs - 1. Each run writes a checkpoint and a
/// metrics file holding the dev and test accuracy and the epoch history.
TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& log);

struct EvalOutcome {
  std::string split;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

/// Accuracy of a checkpoint on one split of the dataset it was trained on.
EvalOutcome cmd_eval(const RunConfig& cfg);

struct InterpretOutcome {
  std::filesystem::path report;
  std::filesystem::path table;
  std::string text;
  std::int32_t predicted = 0;
};

/// Builds the feature support table from the dev split and writes the
/// report for `cfg.text`, or for example `cfg.index` of `cfg.split`. Runs in
/// double precision whatever the stored dtype.
InterpretOutcome cmd_interpret(const RunConfig& cfg);

/// Runs the standard finite-difference suite, followed by `extra` cases.
GradCheckReport cmd_gradcheck(const RunConfig& cfg, std::ostream& out,
                              const std::vector<GradCheckCase>& extra = {});

/// Parses arguments (argv[0] excluded), runs the command and maps failures to
/// exit codes: 0 success, 1 usage, 2 data, 3 numeric.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::vector<GradCheckCase>& extra_gradchecks = {});

}  // namespace dolfin
