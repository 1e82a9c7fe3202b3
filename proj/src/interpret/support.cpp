#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dolfin/error.hpp"
#include "dolfin/interpret.hpp"

namespace dolfin {

FeatureSupportTable FeatureSupportTable::from_counts(std::vector<std::vector<std::uint64_t>> counts,
                                                     std::vector<std::string> categories,
                                                     double delta) {
  const std::size_t m = categories.size();
  if (m == 0 || counts.size() != m) {
    throw DimensionError("support table: " + std::to_string(counts.size()) + " count rows for " +
                         std::to_string(m) + " categories");
  }
  FeatureSupportTable t;
  t.latent = counts[0].size();
  for (const auto& row : counts) {
    if (row.size() != t.latent) throw DimensionError("support table: ragged count rows");
  }
  t.categories = std::move(categories);
  t.delta = delta;
  t.counts = std::move(counts);
  t.q.assign(m, std::vector<double>(t.latent, 0.0));
  t.unused.assign(t.latent, false);
  for (std::size_t j = 0; j < t.latent; ++j) {
    std::uint64_t total = 0;
    for (std::size_t c = 0; c < m; ++c) total += t.counts[c][j];
    t.unused[j] = total == 0;
    for (std::size_t c = 0; c < m; ++c) {
      t.q[c][j] = total == 0 ? 1.0 / static_cast<double>(m)
                             : static_cast<double>(t.counts[c][j]) / static_cast<double>(total);
    }
  }
  return t;
}

nlohmann::json FeatureSupportTable::to_json() const {
  return {{"categories", categories}, {"latent", latent}, {"delta", delta},
          {"counts", counts},         {"q", q},           {"unused", unused}};
}

FeatureSupportTable FeatureSupportTable::from_json(const nlohmann::json& j) {
  try {
    return from_counts(j.at("counts").get<std::vector<std::vector<std::uint64_t>>>(),
                       j.at("categories").get<std::vector<std::string>>(), j.at("delta").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("support table json: ") + e.what());
  }
}

FeatureSupportTable tally_feature_support(std::span<const BagObservation> observations,
                                          std::vector<std::string> categories, std::size_t latent,
                                          double delta) {
  if (observations.empty()) throw UsageError("estimate_feature_support: empty corpus");
  if (!(delta >= 0.0 && delta <= 1.0)) throw UsageError("estimate_feature_support: delta outside [0, 1]");
  const std::size_t m = categories.size();
  std::vector<std::vector<std::uint64_t>> counts(m, std::vector<std::uint64_t>(latent, 0));
  for (const auto& obs : observations) {
    if (obs.predicted < 0 || static_cast<std::size_t>(obs.predicted) >= m) {
      throw DimensionError("estimate_feature_support: predicted category " +
                           std::to_string(obs.predicted) + " outside " + std::to_string(m));
    }
    if (obs.bag.size() != latent) {
      throw DimensionError("estimate_feature_support: bag of width " + std::to_string(obs.bag.size()) +
                           " for " + std::to_string(latent) + " features");
    }
    for (std::size_t j = 0; j < latent; ++j) {
      if (obs.bag[j] > delta) ++counts[static_cast<std::size_t>(obs.predicted)][j];
    }
  }
  return FeatureSupportTable::from_counts(std::move(counts), std::move(categories), delta);
}

template <typename T>
std::vector<BagObservation> observe_bags(const TextClassifier<T>& model,
                                         const std::vector<std::vector<std::int32_t>>& texts,
                                         std::size_t batch) {
  if (!is_dolfin(model.architecture())) {
    throw UsageError("interpretation needs a DoLFIn model, not " + to_string(model.architecture()));
  }
  std::vector<BagObservation> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += batch) {
    Batch b;
    for (std::size_t i = begin; i < std::min(texts.size(), begin + batch); ++i) b.add(texts[i]);
    Tape<T> tape(false);
    const ForwardPass<T> pass = model.forward(tape, b);
    const auto predicted = argmax_rows(pass.logits);
    for (std::size_t i = 0; i < b.size(); ++i) {
      BagObservation obs;
      obs.predicted = predicted[i];
      for (std::size_t j = 0; j < pass.bag.cols(); ++j) obs.bag.push_back(static_cast<double>(pass.bag(i, j)));
      out.push_back(std::move(obs));
    }
  }
  return out;
}

template <typename T>
FeatureSupportTable estimate_feature_support(const TextClassifier<T>& model,
                                             const std::vector<std::vector<std::int32_t>>& texts,
                                             std::vector<std::string> categories, double delta) {
  if (texts.empty()) throw UsageError("estimate_feature_support: empty corpus");
  if (categories.size() != model.config().categories) {
    throw DimensionError("estimate_feature_support: " + std::to_string(categories.size()) +
                         " labels for a model with " + std::to_string(model.config().categories) +
                         " categories");
  }
  const auto observations = observe_bags(model, texts);
  return tally_feature_support(observations, std::move(categories), model.config().latent_features,
                               delta);
}

WordSupport mix_support(const FeatureSupportTable& table, std::vector<std::string> words,
                        Matrix feature_probs) {
  if (words.size() != feature_probs.size()) {
    throw DimensionError("word support: " + std::to_string(words.size()) + " words but " +
                         std::to_string(feature_probs.size()) + " feature rows");
  }
  const std::size_t m = table.categories.size();
  WordSupport ws;
  ws.words = std::move(words);
  for (const auto& row : feature_probs) {
    if (row.size() != table.latent) {
      throw DimensionError("word support: feature row of width " + std::to_string(row.size()) +
                           " against a table of " + std::to_string(table.latent) + " features");
    }
    std::vector<double> mixed(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t j = 0; j < table.latent; ++j) mixed[c] += table.q[c][j] * row[j];
    }
    ws.support.push_back(std::move(mixed));
    ws.top_feature.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  ws.feature_probs = std::move(feature_probs);
  return ws;
}

template <typename T>
WordSupport word_support(const TextClassifier<T>& model, const FeatureSupportTable& table,
                         std::span<const std::int32_t> ids, std::vector<std::string> words) {
  if (!is_dolfin(model.architecture())) {
    throw UsageError("interpretation needs a DoLFIn model, not " + to_string(model.architecture()));
  }
  if (ids.empty()) throw UsageError("word support: empty text");
  if (table.latent != model.config().latent_features ||
      table.categories.size() != model.config().categories) {
    throw DimensionError("word support: table is " + std::to_string(table.categories.size()) + "x" +
                         std::to_string(table.latent) + ", model has " +
                         std::to_string(model.config().categories) + " categories and " +
                         std::to_string(model.config().latent_features) + " features");
  }
  Batch b;
  b.add(ids);
  Tape<T> tape(false);
  const ForwardPass<T> pass = model.forward(tape, b);
  Matrix probs(ids.size(), std::vector<double>(table.latent));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < table.latent; ++j) probs[i][j] = static_cast<double>(pass.latent.u(i, j));
  }
  WordSupport ws = mix_support(table, std::move(words), std::move(probs));
  Tape<T> softmax_tape(false);
  const auto proba = softmax_rows(softmax_tape, pass.logits);
  for (std::size_t c = 0; c < proba.cols(); ++c) ws.class_probs.push_back(static_cast<double>(proba(0, c)));
  ws.predicted = argmax_rows(pass.logits)[0];
  return ws;
}

#define DOLFIN_INSTANTIATE_INTERPRET(T)                                                          \
  template std::vector<BagObservation> observe_bags(                                             \
      const TextClassifier<T>&, const std::vector<std::vector<std::int32_t>>&, std::size_t);     \
  template FeatureSupportTable estimate_feature_support(                                         \
      const TextClassifier<T>&, const std::vector<std::vector<std::int32_t>>&,                   \
      std::vector<std::string>, double);                                                         \
  template WordSupport word_support(const TextClassifier<T>&, const FeatureSupportTable&,        \
                                    std::span<const std::int32_t>, std::vector<std::string>);

DOLFIN_INSTANTIATE_INTERPRET(float)
DOLFIN_INSTANTIATE_INTERPRET(double)

}  // namespace dolfin
