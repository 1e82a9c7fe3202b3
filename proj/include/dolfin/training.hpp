#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dolfin/data.hpp"
#include "dolfin/model.hpp"

namespace dolfin {

/// Token ids and labels of one split.
struct EncodedCorpus {
  std::vector<std::vector<std::int32_t>> texts;
  std::vector<std::int32_t> labels;

  std::size_t size() const { return texts.size(); }
};

EncodedCorpus encode_corpus(const std::vector<Example>& examples, const Vocab& vocab);

Batch make_batch(const EncodedCorpus& corpus, std::span<const std::size_t> indices);
/// Rows [begin, begin + count) in order.
Batch make_batch(const EncodedCorpus& corpus, std::size_t begin, std::size_t count);

struct TrainConfig {
  double lr = 0.001;
  std::size_t batch = 50;
  std::size_t patience = 10;
  double dropout = 0.5;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;

  static AdamState for_parameters(const ParameterList<T>& params);
};

/// One bias-corrected Adam update of every parameter from its gradient buffer.
template <typename T>
void adam_step(ParameterList<T>& params, AdamState<T>& state, double lr);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  double best_dev_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;
  bool stopped_early = false;
};

/// Minibatch Adam on mean cross-entropy. The training order is reshuffled
/// every epoch from the seeded generator; dev accuracy is measured after each
/// epoch and training stops after `patience` epochs without improvement. The
/// parameters of the best dev epoch are restored on return. Throws
/// NumericError if the loss becomes non-finite.
template <typename T>
TrainResult train(TextClassifier<T>& model, const EncodedCorpus& train_split,
                  const EncodedCorpus& dev_split, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

/// Mean training loss of a single pass, without updating anything.
template <typename T>
double corpus_loss(const TextClassifier<T>& model, const EncodedCorpus& corpus,
                   std::size_t batch = 50);

/// Eval-mode argmax predictions, ties to the lowest category index.
template <typename T>
std::vector<std::int32_t> predict_corpus(const TextClassifier<T>& model,
                                         const EncodedCorpus& corpus, std::size_t batch = 50);

template <typename T>
double evaluate_accuracy(const TextClassifier<T>& model, const EncodedCorpus& corpus,
                         std::size_t batch = 50);

/// Mean and population standard deviation across runs.
struct RunSummary {
  double mean = 0.0;
  double stddev = 0.0;
};
RunSummary summarize_runs(std::span<const double> values);

}  // namespace dolfin
