#include "dolfin/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dolfin/error.hpp"

namespace dolfin {

EncodedCorpus encode_corpus(const std::vector<Example>& examples, const Vocab& vocab) {
  EncodedCorpus out;
  out.texts.reserve(examples.size());
  out.labels.reserve(examples.size());
  for (const auto& ex : examples) {
    out.texts.push_back(vocab.encode(ex.tokens));
    out.labels.push_back(ex.label);
  }
  return out;
}

Batch make_batch(const EncodedCorpus& corpus, std::span<const std::size_t> indices) {
  Batch b;
  for (std::size_t i : indices) b.add(corpus.texts.at(i), corpus.labels.at(i));
  return b;
}

Batch make_batch(const EncodedCorpus& corpus, std::size_t begin, std::size_t count) {
  Batch b;
  for (std::size_t i = begin; i < begin + count; ++i) b.add(corpus.texts.at(i), corpus.labels.at(i));
  return b;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("train: learning rate must be positive");
  if (batch == 0 || patience == 0 || max_epochs == 0) {
    throw UsageError("train: batch size, patience and max epochs must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("train: dropout must lie in [0, 1)");
}

template <typename T>
AdamState<T> AdamState<T>::for_parameters(const ParameterList<T>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.tensor.numel(), T(0));
    s.second_moment.emplace_back(p.tensor.numel(), T(0));
  }
  return s;
}

template <typename T>
void adam_step(ParameterList<T>& params, AdamState<T>& state, double lr) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(state.first_moment.size()) + " moment buffers");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T eps = static_cast<T>(state.epsilon);
  const T rate = static_cast<T>(lr);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = params[k].tensor;
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.numel() || v.size() != p.numel()) {
      throw DimensionError("adam_step: moment buffers of " + params[k].name + " do not match " +
                           shape_string(p.shape()));
    }
    const auto g = p.ensure_grad();
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / correction1;
      const T v_hat = v[i] / correction2;
      p[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

namespace {

template <typename T>
std::vector<std::vector<T>> snapshot(const ParameterList<T>& params) {
  std::vector<std::vector<T>> out;
  for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

template <typename T>
void restore(ParameterList<T>& params, const std::vector<std::vector<T>>& values) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    std::copy(values[k].begin(), values[k].end(), params[k].tensor.data().begin());
  }
}

std::string format_epoch(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch %zu train_loss %.6f dev_acc %.4f best_dev_acc %.4f",
                r.epoch, r.train_loss, r.dev_accuracy, r.best_dev_accuracy);
  return buf;
}

}  // namespace

template <typename T>
TrainResult train(TextClassifier<T>& model, const EncodedCorpus& train_split,
                  const EncodedCorpus& dev_split, const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (train_split.size() == 0 || dev_split.size() == 0) {
    throw UsageError("train: train and dev splits must be non-empty");
  }
  ParameterList<T> params = model.parameters();
  AdamState<T> adam = AdamState<T>::for_parameters(params);
  Rng shuffle_rng(cfg.seed);
  Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.best_dev_accuracy = -1.0;
  auto best_params = snapshot(params);
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
      const std::size_t count = std::min(cfg.batch, order.size() - begin);
      const Batch batch =
          make_batch(train_split, std::span<const std::size_t>(order).subspan(begin, count));
      zero_grads(params);
      Tape<T> tape;
      const ForwardPass<T> pass = model.forward(tape, batch, &dropout_rng);
      const Tensor<T> loss = cross_entropy(tape, pass.logits, batch.labels);
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) {
        throw NumericError("training diverged: loss " + std::to_string(value) + " at epoch " +
                           std::to_string(epoch) + ", batch starting at " + std::to_string(begin));
      }
      loss_sum += value * static_cast<double>(count);
      tape.backward(loss);
      adam_step(params, adam, cfg.lr);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    record.dev_accuracy = evaluate_accuracy(model, dev_split, cfg.batch);
    if (record.dev_accuracy > result.best_dev_accuracy) {
      result.best_dev_accuracy = record.dev_accuracy;
      result.best_epoch = epoch;
      best_params = snapshot(params);
      since_best = 0;
    } else {
      ++since_best;
    }
    record.best_dev_accuracy = result.best_dev_accuracy;
    result.history.push_back(record);
    if (log) *log << format_epoch(record) << '\n' << std::flush;
    if (since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  restore(params, best_params);
  zero_grads(params);
  return result;
}

template <typename T>
double corpus_loss(const TextClassifier<T>& model, const EncodedCorpus& corpus, std::size_t batch) {
  double total = 0.0;
  for (std::size_t begin = 0; begin < corpus.size(); begin += batch) {
    const std::size_t count = std::min(batch, corpus.size() - begin);
    const Batch b = make_batch(corpus, begin, count);
    Tape<T> tape(false);
    total += static_cast<double>(cross_entropy(tape, model.forward(tape, b).logits, b.labels).item()) *
             static_cast<double>(count);
  }
  return total / static_cast<double>(corpus.size());
}

template <typename T>
std::vector<std::int32_t> predict_corpus(const TextClassifier<T>& model,
                                         const EncodedCorpus& corpus, std::size_t batch) {
  std::vector<std::int32_t> out;
  out.reserve(corpus.size());
  for (std::size_t begin = 0; begin < corpus.size(); begin += batch) {
    const std::size_t count = std::min(batch, corpus.size() - begin);
    const auto predicted = model.predict(make_batch(corpus, begin, count));
    out.insert(out.end(), predicted.begin(), predicted.end());
  }
  return out;
}

template <typename T>
double evaluate_accuracy(const TextClassifier<T>& model, const EncodedCorpus& corpus,
                         std::size_t batch) {
  if (corpus.size() == 0) throw UsageError("evaluate_accuracy: empty split");
  const auto predicted = predict_corpus(model, corpus, batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == corpus.labels[i];
  return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

RunSummary summarize_runs(std::span<const double> values) {
  RunSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / n);
  return s;
}

#define DOLFIN_INSTANTIATE_TRAINING(T)                                                         \
  template struct AdamState<T>;                                                                \
  template void adam_step(ParameterList<T>&, AdamState<T>&, double);                           \
  template TrainResult train(TextClassifier<T>&, const EncodedCorpus&, const EncodedCorpus&,   \
                             const TrainConfig&, std::ostream*);                               \
  template double corpus_loss(const TextClassifier<T>&, const EncodedCorpus&, std::size_t);    \
  template std::vector<std::int32_t> predict_corpus(const TextClassifier<T>&,                  \
                                                    const EncodedCorpus&, std::size_t);        \
  template double evaluate_accuracy(const TextClassifier<T>&, const EncodedCorpus&, std::size_t);

DOLFIN_INSTANTIATE_TRAINING(float)
DOLFIN_INSTANTIATE_TRAINING(double)

}  // namespace dolfin
